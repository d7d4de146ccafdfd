/**
 * Answer sheet for one task. Every value must come from an explicit user
 * action: category answers start unanswered (not "no"), and serialization
 * refuses until all fields are set.
 */

import {
  AnnotationRecord,
  CATEGORIES,
  Category,
  Correctness,
  Difficulty,
  Redundancy,
  Task,
} from './types';

export class AnnotationForm {
  private categories = new Map<Category, boolean>();
  private difficulty: Difficulty | null = null;
  private correctness: Correctness | null = null;
  private redundancy: Redundancy | null = null;

  constructor(
    readonly task: Task,
    readonly annotatorId: string,
  ) {}

  setCategory(category: Category, value: boolean): void {
    this.categories.set(category, value);
  }

  categoryAnswer(category: Category): boolean | undefined {
    return this.categories.get(category);
  }

  setDifficulty(value: Difficulty): void {
    this.difficulty = value;
  }

  setCorrectness(value: Correctness): void {
    this.correctness = value;
  }

  setRedundancy(value: Redundancy): void {
    this.redundancy = value;
  }

  /** Field names still awaiting an explicit answer, in checklist order. */
  missingFields(): string[] {
    const missing: string[] = [];
    for (const category of CATEGORIES) {
      if (!this.categories.has(category)) missing.push(category);
    }
    if (this.difficulty === null) missing.push('difficulty');
    if (this.correctness === null) missing.push('correctness');
    if (this.redundancy === null) missing.push('redundancy');
    return missing;
  }

  isComplete(): boolean {
    return this.missingFields().length === 0;
  }

  toRecord(timestamp: string): AnnotationRecord {
    const missing = this.missingFields();
    if (missing.length > 0) {
      throw new Error(`unanswered fields: ${missing.join(', ')}`);
    }
    const categories = {} as Record<Category, boolean>;
    for (const category of CATEGORIES) {
      categories[category] = this.categories.get(category)!;
    }
    return {
      annotator_id: this.annotatorId,
      instance_id: this.task.instance_id,
      phrase_id: this.task.phrase_id,
      difficulty: this.difficulty!,
      correctness: this.correctness!,
      categories,
      redundancy: this.redundancy!,
      timestamp,
    };
  }
}
