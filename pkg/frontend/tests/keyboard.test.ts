import { describe, expect, it } from 'vitest';

import { actionForKey } from '../src/keyboard';

describe('actionForKey', () => {
  it('maps yes/no answers', () => {
    expect(actionForKey('y')).toEqual({ type: 'answer', value: true });
    expect(actionForKey('N')).toEqual({ type: 'answer', value: false });
  });

  it('maps digits to the seven questions', () => {
    expect(actionForKey('1')).toEqual({ type: 'focus-question', index: 0 });
    expect(actionForKey('7')).toEqual({ type: 'focus-question', index: 6 });
    expect(actionForKey('8')).toBeNull();
    expect(actionForKey('0')).toBeNull();
  });

  it('maps frame stepping and submit', () => {
    expect(actionForKey('ArrowLeft')).toEqual({ type: 'step-frame', delta: -1 });
    expect(actionForKey('ArrowRight')).toEqual({ type: 'step-frame', delta: 1 });
    expect(actionForKey('Enter')).toEqual({ type: 'submit' });
  });

  it('ignores unrelated keys', () => {
    expect(actionForKey('q')).toBeNull();
    expect(actionForKey('Escape')).toBeNull();
  });
});
