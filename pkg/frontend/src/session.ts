/** Annotation session state: cursor, completion and local score buffers.
 *
 * Scores entered in the UI are buffered here (and mirrored to storage)
 * until the service acknowledges them, so a flaky connection never loses
 * input. The cursor always points at the first uncompleted record;
 * completed records are a subset of the batch.
 */

import type { BatchInfo } from "./api.js";
import type { KeyValueStore } from "./storage.js";

export const MIN_SCORE = 0;
export const MAX_SCORE = 4;

export type Selections = Record<string, number>;

interface BufferState {
  [recordId: string]: Selections;
}

export class AnnotationSession {
  readonly annotatorId: string;
  readonly batchId: string;
  readonly recordIds: readonly string[];
  private readonly categories: readonly string[];
  private readonly completedSet: Set<string>;
  private buffers: BufferState = {};
  private cursorIndex = 0;
  private readonly store: KeyValueStore | null;

  constructor(
    annotatorId: string,
    batch: BatchInfo,
    categories: readonly string[],
    store: KeyValueStore | null = null,
  ) {
    if (!annotatorId) {
      throw new Error("annotator id must be non-empty");
    }
    this.annotatorId = annotatorId;
    this.batchId = batch.batch_id;
    this.recordIds = [...batch.record_ids];
    this.categories = [...categories];
    this.store = store;
    const done = batch.completed[annotatorId] ?? [];
    this.completedSet = new Set(done.filter((id) => this.recordIds.includes(id)));
    this.restoreBuffers();
    this.cursorIndex = this.firstUncompletedIndex();
  }

  private get bufferKey(): string {
    return `newsenrich.buffers.${this.batchId}.${this.annotatorId}`;
  }

  private restoreBuffers(): void {
    if (!this.store) return;
    const raw = this.store.get(this.bufferKey);
    if (!raw) return;
    try {
      const parsed = JSON.parse(raw) as BufferState;
      const cleaned: BufferState = {};
      for (const [recordId, selections] of Object.entries(parsed)) {
        if (!this.recordIds.includes(recordId)) continue;
        const valid: Selections = {};
        for (const [category, value] of Object.entries(selections)) {
          if (
            this.categories.includes(category) &&
            Number.isInteger(value) &&
            value >= MIN_SCORE &&
            value <= MAX_SCORE
          ) {
            valid[category] = value;
          }
        }
        if (Object.keys(valid).length > 0) {
          cleaned[recordId] = valid;
        }
      }
      this.buffers = cleaned;
    } catch {
      this.buffers = {};
    }
  }

  private persistBuffers(): void {
    this.store?.set(this.bufferKey, JSON.stringify(this.buffers));
  }

  firstUncompletedIndex(): number {
    for (let i = 0; i < this.recordIds.length; i++) {
      const id = this.recordIds[i];
      if (id !== undefined && !this.completedSet.has(id)) {
        return i;
      }
    }
    return this.recordIds.length; // everything done
  }

  get cursor(): number {
    return this.cursorIndex;
  }

  get done(): boolean {
    return this.cursorIndex >= this.recordIds.length;
  }

  get currentRecordId(): string | null {
    return this.done ? null : this.recordIds[this.cursorIndex] ?? null;
  }

  get completed(): ReadonlySet<string> {
    return this.completedSet;
  }

  progress(): { done: number; total: number } {
    return { done: this.completedSet.size, total: this.recordIds.length };
  }

  /** Buffer one category selection; only integers 0..4 are accepted. */
  select(recordId: string, category: string, value: number): void {
    if (!this.recordIds.includes(recordId)) {
      throw new RangeError(`record ${recordId} is not in this batch`);
    }
    if (!this.categories.includes(category)) {
      throw new RangeError(`unknown category ${category}`);
    }
    if (!Number.isInteger(value) || value < MIN_SCORE || value > MAX_SCORE) {
      throw new RangeError(`score ${value} outside ${MIN_SCORE}..${MAX_SCORE}`);
    }
    const existing = this.buffers[recordId] ?? {};
    existing[category] = value;
    this.buffers[recordId] = existing;
    this.persistBuffers();
  }

  selections(recordId: string): Selections {
    return { ...(this.buffers[recordId] ?? {}) };
  }

  missingCategories(recordId: string): string[] {
    const chosen = this.buffers[recordId] ?? {};
    return this.categories.filter((category) => !(category in chosen));
  }

  isComplete(recordId: string): boolean {
    return this.missingCategories(recordId).length === 0;
  }

  /** Acknowledge a server-accepted submission: mark done, drop the buffer,
   * move the cursor to the next uncompleted record. */
  markCompleted(recordId: string): void {
    if (!this.recordIds.includes(recordId)) {
      throw new RangeError(`record ${recordId} is not in this batch`);
    }
    this.completedSet.add(recordId);
    delete this.buffers[recordId];
    this.persistBuffers();
    this.cursorIndex = this.firstUncompletedIndex();
  }
}
