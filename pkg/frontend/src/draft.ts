// Draft answers persisted per task+annotator so a reload (or an accidental
// tab close) never loses work. Backed by localStorage in the browser; the
// interface is injectable for tests.

import type { Answer } from "./types.js";
import { ANSWERS } from "./types.js";

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class DraftStore {
  constructor(
    private readonly storage: KeyValueStore,
    private readonly prefix = "featner-draft",
  ) {}

  private key(taskId: string, annotatorId: string): string {
    return `${this.prefix}:${taskId}:${annotatorId}`;
  }

  load(taskId: string, annotatorId: string): Record<string, Answer> {
    const raw = this.storage.getItem(this.key(taskId, annotatorId));
    if (!raw) {
      return {};
    }
    try {
      const parsed = JSON.parse(raw);
      const draft: Record<string, Answer> = {};
      for (const [itemId, answer] of Object.entries(parsed)) {
        if (ANSWERS.includes(answer as Answer)) {
          draft[itemId] = answer as Answer;
        }
      }
      return draft;
    } catch {
      return {}; // corrupt draft is no draft
    }
  }

  save(taskId: string, annotatorId: string, draft: Record<string, Answer>): void {
    this.storage.setItem(this.key(taskId, annotatorId), JSON.stringify(draft));
  }

  clear(taskId: string, annotatorId: string): void {
    this.storage.removeItem(this.key(taskId, annotatorId));
  }
}
