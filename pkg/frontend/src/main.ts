// DOM shell: a connect screen, then one question per screen with keyboard
// shortcuts. All service traffic goes through ApiClient; all state lives
// in TaskView + DraftStore so a reload resumes where the annotator left off.

import { ApiClient, ConflictError, ControlMarkerError } from "./api.js";
import { DraftStore } from "./draft.js";
import { findHighlight, splitSentence } from "./highlight.js";
import { TaskView } from "./state.js";
import type { Answer, Task, TaskSummary } from "./types.js";
import { ANSWERS } from "./types.js";

const app = document.getElementById("app")!;
const drafts = new DraftStore(window.localStorage);

const DEFAULT_BASE =
  window.location.protocol === "file:" ? "http://127.0.0.1:8715" : window.location.origin;

interface Session {
  client: ApiClient;
  annotatorId: string;
  view: TaskView;
}

let session: Session | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

// --- connect screen ---------------------------------------------------------

function renderConnect(message = ""): void {
  session = null;
  app.replaceChildren();
  const box = el("div", "card");
  box.append(el("h1", "", "Feature annotation"));
  if (message) box.append(el("p", "error", message));

  const urlLabel = el("label", "", "Service URL");
  const urlInput = el("input");
  urlInput.value = window.localStorage.getItem("featner-base") ?? DEFAULT_BASE;
  urlLabel.append(urlInput);

  const idLabel = el("label", "", "Annotator ID");
  const idInput = el("input");
  idInput.value = window.localStorage.getItem("featner-annotator") ?? "";
  idInput.placeholder = "e.g. annotator-07";
  idLabel.append(idInput);

  const go = el("button", "primary", "Load tasks");
  go.onclick = async () => {
    const base = urlInput.value.trim();
    const annotator = idInput.value.trim();
    if (!base || !annotator) {
      renderConnect("service URL and annotator ID are both required");
      return;
    }
    window.localStorage.setItem("featner-base", base);
    window.localStorage.setItem("featner-annotator", annotator);
    const client = new ApiClient(base);
    try {
      renderTaskList(client, annotator, await client.listTasks());
    } catch (err) {
      renderConnect(`could not reach the service: ${(err as Error).message}`);
    }
  };

  box.append(urlLabel, idLabel, go);
  app.append(box);
}

function renderTaskList(client: ApiClient, annotatorId: string, tasks: TaskSummary[]): void {
  app.replaceChildren();
  const box = el("div", "card");
  box.append(el("h1", "", "Pick a task"));
  if (!tasks.length) {
    box.append(el("p", "", "the store has no tasks yet"));
  }
  for (const t of tasks) {
    const row = el("button", t.open ? "task" : "task closed");
    row.textContent =
      `${t.task_id}  (${t.n_items} items, ` +
      `${t.open ? "open" : "closed"}, ${t.accepted_responses} accepted)`;
    row.disabled = !t.open;
    row.onclick = async () => {
      try {
        openTask(client, annotatorId, await client.getTask(t.task_id));
      } catch (err) {
        const why =
          err instanceof ControlMarkerError
            ? `refusing to render task: ${err.message}`
            : (err as Error).message;
        renderConnect(why);
      }
    };
    box.append(row);
  }
  const back = el("button", "", "Back");
  back.onclick = () => renderConnect();
  box.append(back);
  app.append(box);
}

// --- annotation screen -------------------------------------------------------

function openTask(client: ApiClient, annotatorId: string, task: Task): void {
  const view = new TaskView(task, drafts.load(task.task_id, annotatorId));
  session = { client, annotatorId, view };
  view.goToPending();
  renderItem();
}

function saveDraft(): void {
  if (!session) return;
  drafts.save(session.view.taskId, session.annotatorId, session.view.toDraft());
}

function renderItem(notice = ""): void {
  if (!session) return;
  const { view } = session;
  const item = view.current;
  app.replaceChildren();

  const card = el("div", "card");
  card.append(
    el("div", "progress",
       `${view.taskId} - item ${view.index + 1} / ${view.items.length} - ` +
       `${view.answeredCount()} answered`),
  );

  // app context block: name, store link, category
  const context = el("div", "context");
  context.append(el("span", "app-name", item.app_name));
  if (item.store_url) {
    const link = el("a", "store-link", "store page");
    link.href = item.store_url;
    link.target = "_blank";
    context.append(link);
  }
  context.append(el("span", "category", item.category));
  card.append(context);

  // review sentence with the candidate highlighted verbatim
  const hl = findHighlight(item.sentence_text, item.candidate_text);
  const sentence = el("p", "sentence");
  if (hl) {
    const parts = splitSentence(item.sentence_text, hl);
    sentence.append(parts.before, el("mark", "", parts.match), parts.after);
  } else {
    sentence.textContent = item.sentence_text;
    card.append(el("p", "error",
                   "candidate text not found in this sentence; answering is disabled"));
  }
  card.append(sentence);

  card.append(el("p", "question", item.question));
  card.append(el("p", "candidate", `candidate: ${item.candidate_text}`));

  const buttons = el("div", "answers");
  for (const answer of ANSWERS) {
    const b = el("button", "answer", answer);
    b.disabled = hl === null;
    if (view.answerOf(item.item_id) === answer) b.classList.add("selected");
    b.onclick = () => chooseAnswer(answer);
    buttons.append(b);
  }
  card.append(buttons);

  const nav = el("div", "nav");
  const prev = el("button", "", "< prev");
  prev.disabled = view.index === 0;
  prev.onclick = () => {
    view.prev();
    renderItem();
  };
  const next = el("button", "", "next >");
  next.disabled = view.index === view.items.length - 1;
  next.onclick = () => {
    view.next();
    renderItem();
  };
  const submit = el("button", "primary",
                    `Submit (${view.answeredCount()}/${view.items.length})`);
  submit.disabled = !view.canSubmit(); // every item must be answered first
  submit.onclick = () => void doSubmit();
  nav.append(prev, next, submit);
  card.append(nav);

  if (notice) card.append(el("p", "error", notice));
  card.append(el("p", "hint",
                 "keys: y / n / i answer, arrows navigate, s submit"));
  app.append(card);
}

function chooseAnswer(answer: Answer): void {
  if (!session) return;
  session.view.setAnswer(answer);
  saveDraft();
  if (session.view.index < session.view.items.length - 1) {
    session.view.next();
  }
  renderItem();
}

async function doSubmit(): Promise<void> {
  if (!session || !session.view.canSubmit()) return;
  const { client, annotatorId, view } = session;
  try {
    const result = await client.submit(view.taskId, annotatorId, view.toAnswers());
    drafts.clear(view.taskId, annotatorId); // server has it now
    renderDone(result.accepted);
  } catch (err) {
    if (err instanceof ConflictError) {
      renderItem(`already submitted: ${err.message}`);
    } else {
      // network or validation problem: the draft stays, offer a retry
      renderItem(`submit failed (${(err as Error).message}); your answers are saved, press s to retry`);
    }
  }
}

function renderDone(accepted: boolean): void {
  app.replaceChildren();
  const card = el("div", "card");
  card.append(el("h1", "", "Response recorded"));
  card.append(el("p", accepted ? "" : "error",
                 accepted
                   ? "control questions passed; your answers count"
                   : "control questions failed; this response will not be used"));
  const back = el("button", "primary", "Back to tasks");
  back.onclick = () => renderConnect();
  card.append(back);
  session = null;
  app.append(card);
}

// --- keyboard shortcuts -------------------------------------------------------

const KEY_ANSWERS: Record<string, Answer> = {
  y: "Yes", "1": "Yes",
  n: "No", "2": "No",
  i: "IDK", "3": "IDK",
};

document.addEventListener("keydown", (event) => {
  if (!session || event.target instanceof HTMLInputElement) return;
  const key = event.key.toLowerCase();
  if (key in KEY_ANSWERS) {
    const item = session.view.current;
    if (findHighlight(item.sentence_text, item.candidate_text)) {
      chooseAnswer(KEY_ANSWERS[key]);
    }
  } else if (event.key === "ArrowRight") {
    session.view.next();
    renderItem();
  } else if (event.key === "ArrowLeft") {
    session.view.prev();
    renderItem();
  } else if (key === "s") {
    void doSubmit();
  }
});

renderConnect();
