import { ApiClient } from './api';
import { AnnotationSession } from './controller';
import { AnnotationView } from './ui';

const BASE_URL = (window as unknown as { ANNOT_BASE_URL?: string }).ANNOT_BASE_URL ?? '';

function boot(): void {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app element');

  const prompt = document.createElement('div');
  const input = document.createElement('input');
  input.type = 'text';
  input.placeholder = 'annotator id';
  const button = document.createElement('button');
  button.textContent = 'start session';
  prompt.append(input, button);
  root.append(prompt);

  button.addEventListener('click', () => {
    const annotator = input.value.trim();
    if (!annotator) return;
    const api = new ApiClient(BASE_URL);
    const session = new AnnotationSession(api, annotator);
    void session
      .start()
      .then(() => {
        root.replaceChildren();
        new AnnotationView(root, api, session).install();
      })
      .catch((error) => {
        const banner = document.createElement('p');
        banner.className = 'error';
        banner.textContent = String(error);
        prompt.append(banner);
      });
  });
}

document.addEventListener('DOMContentLoaded', boot);
