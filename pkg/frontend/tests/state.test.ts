import { describe, expect, it } from "vitest";

import { TaskView } from "../src/state.js";
import type { Task } from "../src/types.js";

function task(nItems: number): Task {
  return {
    task_id: "task-001",
    items: Array.from({ length: nItems }, (_, i) => ({
      item_id: `item-${i + 1}`,
      app_name: "NoteKeeper",
      store_url: "https://example.com/app",
      category: "PRODUCTIVITY",
      sentence_text: `sentence number ${i + 1}`,
      candidate_text: "sentence",
      question: "Is the highlighted text an app feature?",
    })),
  };
}

describe("TaskView", () => {
  it("unlocks submission only when every item is answered", () => {
    const view = new TaskView(task(3));
    expect(view.canSubmit()).toBe(false);
    view.setAnswer("Yes");
    view.next();
    view.setAnswer("No");
    expect(view.canSubmit()).toBe(false);
    expect(view.answeredCount()).toBe(2);
    view.next();
    view.setAnswer("IDK");
    expect(view.canSubmit()).toBe(true);
    expect(view.toAnswers()).toEqual({ "item-1": "Yes", "item-2": "No", "item-3": "IDK" });
  });

  it("refuses to build a submit payload while items are unanswered", () => {
    const view = new TaskView(task(4));
    view.setAnswer("Yes");
    expect(() => view.toAnswers()).toThrow(/3 items unanswered/);
  });

  it("clamps navigation at both ends", () => {
    const view = new TaskView(task(2));
    view.prev();
    expect(view.index).toBe(0);
    view.next();
    view.next();
    view.next();
    expect(view.index).toBe(1);
    view.goTo(99);
    expect(view.index).toBe(1);
    view.goTo(-5);
    expect(view.index).toBe(0);
  });

  it("re-answering the same item does not double count", () => {
    const view = new TaskView(task(2));
    view.setAnswer("Yes");
    view.setAnswer("No");
    expect(view.answeredCount()).toBe(1);
    expect(view.answerOf("item-1")).toBe("No");
  });

  it("goToPending jumps to the first unanswered item", () => {
    const view = new TaskView(task(3), { "item-1": "Yes" });
    expect(view.goToPending()).toBe(true);
    expect(view.index).toBe(1);
    view.setAnswer("No");
    view.goTo(0);
    expect(view.goToPending()).toBe(true);
    expect(view.index).toBe(2);
    view.setAnswer("Yes");
    expect(view.goToPending()).toBe(false);
  });

  it("drops draft answers for items the task no longer has", () => {
    const view = new TaskView(task(2), {
      "item-1": "Yes",
      "item-99": "No", // stale key from an older task layout
    });
    expect(view.answeredCount()).toBe(1);
    expect(view.answerOf("item-99")).toBeUndefined();
    expect(view.toDraft()).toEqual({ "item-1": "Yes" });
  });
});
