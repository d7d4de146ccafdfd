/**
 * Keyboard layout for annotation throughput: y/n answers the focused
 * question and moves focus on, digits jump to a question, arrows scrub
 * frames, Enter submits.
 */

export type KeyAction =
  | { type: 'answer'; value: boolean }
  | { type: 'focus-question'; index: number }
  | { type: 'step-frame'; delta: number }
  | { type: 'submit' };

export function actionForKey(key: string): KeyAction | null {
  switch (key) {
    case 'y':
    case 'Y':
      return { type: 'answer', value: true };
    case 'n':
    case 'N':
      return { type: 'answer', value: false };
    case 'ArrowLeft':
      return { type: 'step-frame', delta: -1 };
    case 'ArrowRight':
      return { type: 'step-frame', delta: 1 };
    case 'Enter':
      return { type: 'submit' };
    default:
      if (/^[1-7]$/.test(key)) {
        return { type: 'focus-question', index: Number(key) - 1 };
      }
      return null;
  }
}
