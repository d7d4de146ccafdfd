/**
 * DOM layer: renders the current task (frame scrubber, referent box overlay,
 * phrase, checklist), relays explicit user actions into the form, and
 * surfaces every service error inline.
 */

import { ApiClient } from './api';
import { AnnotationSession } from './controller';
import { actionForKey } from './keyboard';
import { CATEGORIES, Category, Correctness, Difficulty, Question, Redundancy } from './types';

const META_CHOICES: Record<string, string[]> = {
  difficulty: ['trivial', 'non_trivial'],
  correctness: ['valid_re', 'no_re', 'wrong_object'],
  redundancy: ['redundant', 'minimal'],
};

export class AnnotationView {
  private focusedQuestion = 0;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private session: AnnotationSession,
  ) {}

  install(): void {
    document.addEventListener('keydown', (event) => this.onKey(event));
    this.render();
  }

  private onKey(event: KeyboardEvent): void {
    if (event.target instanceof HTMLInputElement && event.target.type === 'text') {
      return;
    }
    const action = actionForKey(event.key);
    if (!action || this.session.done) return;
    event.preventDefault();
    if (action.type === 'answer') {
      const category = CATEGORIES[this.focusedQuestion];
      this.session.form.setCategory(category, action.value);
      this.focusedQuestion = Math.min(this.focusedQuestion + 1, CATEGORIES.length - 1);
      this.render();
    } else if (action.type === 'focus-question') {
      this.focusedQuestion = action.index;
      this.render();
    } else if (action.type === 'step-frame') {
      this.session.stepFrame(action.delta);
      this.render();
    } else if (action.type === 'submit') {
      void this.submit();
    }
  }

  private async submit(): Promise<void> {
    const outcome = await this.session.submitAndAdvance();
    this.focusedQuestion = 0;
    this.render(outcome.ok ? '' : outcome.reason);
  }

  render(error = ''): void {
    const task = this.session.current;
    this.root.replaceChildren();
    if (!task) {
      const done = el('p', 'All tasks labeled.');
      const link = document.createElement('a');
      link.href = `${(this.api as unknown as { baseUrl: string }).baseUrl ?? ''}/export`;
      link.textContent = 'download export';
      this.root.append(done, link);
      return;
    }

    this.root.append(
      el('p', `${this.session.remaining} tasks left — ${task.instance_id} / ${task.phrase_id}`),
      el('h2', `"${task.phrase}"`),
    );
    if (error) {
      const banner = el('p', error);
      banner.className = 'error';
      this.root.append(banner);
    }
    this.root.append(this.frameView(task.video_id));
    this.root.append(this.scrubber());
    this.root.append(this.checklist(task.questions ?? []));

    const submit = document.createElement('button');
    submit.textContent = 'submit and next (Enter)';
    submit.addEventListener('click', () => void this.submit());
    this.root.append(submit);
  }

  private frameView(videoId: string): HTMLElement {
    const wrap = document.createElement('div');
    wrap.className = 'frame';
    const frame = this.session.currentFrame();
    const img = document.createElement('img');
    img.src = this.api.frameUrl(videoId, frame);
    img.addEventListener('load', () => {
      const box = this.session.currentBox();
      if (!box) return;
      const overlay = document.createElement('canvas');
      overlay.width = img.naturalWidth;
      overlay.height = img.naturalHeight;
      overlay.className = 'overlay';
      const ctx = overlay.getContext('2d');
      if (ctx) {
        const [x0, y0, x1, y1] = box;
        ctx.strokeStyle = 'lime';
        ctx.lineWidth = Math.max(1, img.naturalWidth / 100);
        ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
      }
      wrap.append(overlay);
    });
    wrap.append(img);
    return wrap;
  }

  private scrubber(): HTMLElement {
    const input = document.createElement('input');
    input.type = 'range';
    input.min = '0';
    input.max = String(Math.max(this.session.frameCount - 1, 0));
    input.value = String(this.session.frameIndex);
    input.addEventListener('input', () => {
      this.session.frameIndex = Number(input.value);
      this.render();
    });
    const label = el(
      'span',
      ` frame ${this.session.frameIndex + 1}/${this.session.frameCount}`,
    );
    const wrap = document.createElement('div');
    wrap.append(input, label);
    return wrap;
  }

  private checklist(questions: Question[]): HTMLElement {
    const list = document.createElement('ol');
    for (const [index, question] of questions.entries()) {
      const item = document.createElement('li');
      if (index === this.focusedQuestion) item.className = 'focused';
      item.append(el('span', question.text + ' '));
      if (question.choices.length === 2 && question.choices[0] === 'yes') {
        item.append(this.yesNo(question.key as Category));
      } else {
        item.append(this.choiceRow(question.key, META_CHOICES[question.key] ?? question.choices));
      }
      list.append(item);
    }
    return list;
  }

  private yesNo(category: Category): HTMLElement {
    const wrap = document.createElement('span');
    const current = this.session.form.categoryAnswer(category);
    for (const value of [true, false]) {
      const button = document.createElement('button');
      button.textContent = value ? 'yes' : 'no';
      if (current === value) button.className = 'selected';
      button.addEventListener('click', () => {
        this.session.form.setCategory(category, value);
        this.render();
      });
      wrap.append(button);
    }
    return wrap;
  }

  private choiceRow(key: string, choices: string[]): HTMLElement {
    const wrap = document.createElement('span');
    for (const choice of choices) {
      const button = document.createElement('button');
      button.textContent = choice;
      button.addEventListener('click', () => {
        if (key === 'difficulty') this.session.form.setDifficulty(choice as Difficulty);
        else if (key === 'correctness') this.session.form.setCorrectness(choice as Correctness);
        else if (key === 'redundancy') this.session.form.setRedundancy(choice as Redundancy);
        this.render();
      });
      wrap.append(button);
    }
    return wrap;
  }
}

function el(tag: string, text: string): HTMLElement {
  const node = document.createElement(tag);
  node.textContent = text;
  return node;
}
