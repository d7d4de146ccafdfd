/** Thin client over the annotation backend's HTTP+JSON API. */

import { AnnotationRecord, Task, TaskSummary } from './types';

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface SubmitResult {
  version: number;
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  async listTasks(annotator: string, unlabeledOnly = false): Promise<TaskSummary[]> {
    const params = new URLSearchParams({ annotator });
    if (unlabeledOnly) params.set('unlabeled', 'true');
    const response = await this.request(`/tasks?${params}`);
    return (await response.json()) as TaskSummary[];
  }

  async getTask(taskId: string): Promise<Task> {
    const response = await this.request(`/tasks/${taskId}`);
    return (await response.json()) as Task;
  }

  async submit(record: AnnotationRecord): Promise<SubmitResult> {
    const response = await this.request('/annotations', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(record),
    });
    return (await response.json()) as SubmitResult;
  }

  async exportJsonl(): Promise<string> {
    const response = await this.request('/export');
    return await response.text();
  }

  frameUrl(videoId: string, frame: string): string {
    return `${this.baseUrl}/frames/${videoId}/${frame}`;
  }
}
