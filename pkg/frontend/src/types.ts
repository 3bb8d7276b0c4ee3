// Shapes served by the annotation service. Items deliberately carry no
// control-question markers; api.ts enforces that.

export interface TaskSummary {
  task_id: string;
  n_items: number;
  open: boolean;
  accepted_responses: number;
}

export interface TaskItem {
  item_id: string;
  app_name: string;
  store_url: string;
  category: string;
  sentence_text: string;
  candidate_text: string;
  question: string;
}

export interface Task {
  task_id: string;
  items: TaskItem[];
}

export type Answer = "Yes" | "No" | "IDK";

export const ANSWERS: readonly Answer[] = ["Yes", "No", "IDK"];

export interface SubmitResult {
  status: string;
  accepted: boolean;
}
