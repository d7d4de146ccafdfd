/**
 * AnnotationRecord serialization in the exact byte format the backend's
 * export emits (Python json.dumps defaults: ", " / ": " separators, fixed
 * key order). Keeping this byte-compatible lets hand-written JSONL, UI
 * submissions, and service exports diff cleanly.
 */

import { AnnotationRecord, CATEGORIES } from './types';

function jsonScalar(value: string | number | boolean): string {
  return JSON.stringify(value);
}

function pyObject(entries: [string, string][]): string {
  return '{' + entries.map(([k, v]) => `${jsonScalar(k)}: ${v}`).join(', ') + '}';
}

/** One JSONL line, byte-identical to the service export for this record. */
export function recordToJsonLine(record: AnnotationRecord): string {
  const categories = pyObject(
    CATEGORIES.map((c) => [c, jsonScalar(record.categories[c])]),
  );
  return pyObject([
    ['annotator_id', jsonScalar(record.annotator_id)],
    ['instance_id', jsonScalar(record.instance_id)],
    ['phrase_id', jsonScalar(record.phrase_id)],
    ['difficulty', jsonScalar(record.difficulty)],
    ['correctness', jsonScalar(record.correctness)],
    ['categories', categories],
    ['redundancy', jsonScalar(record.redundancy)],
    ['timestamp', jsonScalar(record.timestamp)],
  ]);
}
