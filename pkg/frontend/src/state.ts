// One-item-at-a-time task state. Navigation clamps to bounds and
// submission only unlocks once every item has an answer.

import type { Answer, Task, TaskItem } from "./types.js";

export class TaskView {
  readonly taskId: string;
  readonly items: readonly TaskItem[];
  private answers = new Map<string, Answer>();
  private cursor = 0;

  constructor(task: Task, draft: Record<string, Answer> = {}) {
    this.taskId = task.task_id;
    this.items = task.items;
    const known = new Set(task.items.map((i) => i.item_id));
    for (const [itemId, answer] of Object.entries(draft)) {
      if (known.has(itemId)) {
        this.answers.set(itemId, answer); // stale draft entries are dropped
      }
    }
  }

  get index(): number {
    return this.cursor;
  }

  get current(): TaskItem {
    return this.items[this.cursor];
  }

  answerOf(itemId: string): Answer | undefined {
    return this.answers.get(itemId);
  }

  setAnswer(answer: Answer): void {
    this.answers.set(this.current.item_id, answer);
  }

  next(): void {
    this.cursor = Math.min(this.cursor + 1, this.items.length - 1);
  }

  prev(): void {
    this.cursor = Math.max(this.cursor - 1, 0);
  }

  goTo(index: number): void {
    this.cursor = Math.max(0, Math.min(index, this.items.length - 1));
  }

  // jump to the first unanswered item, if any
  goToPending(): boolean {
    const i = this.items.findIndex((item) => !this.answers.has(item.item_id));
    if (i < 0) {
      return false;
    }
    this.cursor = i;
    return true;
  }

  answeredCount(): number {
    return this.answers.size;
  }

  canSubmit(): boolean {
    return this.answers.size === this.items.length;
  }

  toDraft(): Record<string, Answer> {
    return Object.fromEntries(this.answers);
  }

  // the submit payload; callers must have checked canSubmit()
  toAnswers(): Record<string, Answer> {
    if (!this.canSubmit()) {
      throw new Error(
        `cannot submit: ${this.items.length - this.answers.size} items unanswered`,
      );
    }
    return this.toDraft();
  }
}
