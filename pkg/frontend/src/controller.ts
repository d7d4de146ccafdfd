/**
 * Session state machine: walks the annotator through their unlabeled tasks,
 * owns the current form and frame position, and keeps form state intact when
 * a submit is rejected.
 */

import { ApiClient, ApiError } from './api';
import { AnnotationForm } from './form';
import { Box, Task, TaskSummary } from './types';

export type SubmitOutcome =
  | { ok: true; version: number; done: boolean }
  | { ok: false; reason: string; missing?: string[] };

export class AnnotationSession {
  private queue: TaskSummary[] = [];
  private task: Task | null = null;
  private formState: AnnotationForm | null = null;
  frameIndex = 0;

  constructor(
    private api: ApiClient,
    readonly annotatorId: string,
    private now: () => string = () => new Date().toISOString(),
  ) {}

  /** Fetch the unlabeled queue and open the first task. */
  async start(): Promise<void> {
    this.queue = await this.api.listTasks(this.annotatorId, true);
    await this.openNext();
  }

  private async openNext(): Promise<void> {
    const next = this.queue.shift();
    if (!next) {
      this.task = null;
      this.formState = null;
      return;
    }
    await this.openTask(next.task_id);
  }

  /** Open any task by id, e.g. for a revision pass over labeled tasks. */
  async openTask(taskId: string): Promise<Task> {
    this.task = await this.api.getTask(taskId);
    this.formState = new AnnotationForm(this.task, this.annotatorId);
    this.frameIndex = 0;
    return this.task;
  }

  get current(): Task | null {
    return this.task;
  }

  get form(): AnnotationForm {
    if (!this.formState) throw new Error('no open task');
    return this.formState;
  }

  get done(): boolean {
    return this.task === null;
  }

  get remaining(): number {
    return this.queue.length + (this.task ? 1 : 0);
  }

  get frameCount(): number {
    return this.task ? this.task.frames.length : 0;
  }

  currentFrame(): string {
    if (!this.task) throw new Error('no open task');
    return this.task.frames[this.frameIndex];
  }

  currentBox(): Box {
    if (!this.task) throw new Error('no open task');
    return this.task.boxes[this.currentFrame()];
  }

  stepFrame(delta: number): number {
    const last = this.frameCount - 1;
    this.frameIndex = Math.min(Math.max(this.frameIndex + delta, 0), Math.max(last, 0));
    return this.frameIndex;
  }

  /**
   * Validate, POST, and advance to the next unlabeled task. On validation or
   * service failure the form keeps its state so nothing typed is lost.
   */
  async submitAndAdvance(): Promise<SubmitOutcome> {
    if (!this.task || !this.formState) {
      return { ok: false, reason: 'no open task' };
    }
    const missing = this.formState.missingFields();
    if (missing.length > 0) {
      return { ok: false, reason: `unanswered: ${missing.join(', ')}`, missing };
    }
    const record = this.formState.toRecord(this.now());
    try {
      const result = await this.api.submit(record);
      await this.openNext();
      return { ok: true, version: result.version, done: this.done };
    } catch (error) {
      if (error instanceof ApiError) {
        return { ok: false, reason: error.detail };
      }
      throw error;
    }
  }
}
