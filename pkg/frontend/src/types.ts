/**
 * Wire types shared with the annotation backend. Field names and the
 * category order must stay exactly in sync with the service's JSONL schema.
 */

export const CATEGORIES = [
  'appearance',
  'category',
  'location',
  'motion',
  'obj_motion',
  'static',
  'obj_static',
] as const;

export type Category = (typeof CATEGORIES)[number];

export type Difficulty = 'trivial' | 'non_trivial';
export type Correctness = 'valid_re' | 'no_re' | 'wrong_object';
export type Redundancy = 'redundant' | 'minimal';

export interface AnnotationRecord {
  annotator_id: string;
  instance_id: string;
  phrase_id: string;
  difficulty: Difficulty;
  correctness: Correctness;
  categories: Record<Category, boolean>;
  redundancy: Redundancy;
  timestamp: string;
}

export interface Question {
  key: string;
  text: string;
  choices: string[];
}

/** [x0, y0, x1, y1], end-exclusive pixel box; null when the referent is absent. */
export type Box = [number, number, number, number] | null;

export interface Task {
  task_id: string;
  instance_id: string;
  phrase_id: string;
  phrase: string;
  video_id: string;
  frames: string[];
  boxes: Record<string, Box>;
  questions?: Question[];
}

export interface TaskSummary {
  task_id: string;
  instance_id: string;
  phrase_id: string;
  phrase: string;
  n_frames: number;
  labeled: boolean;
}
