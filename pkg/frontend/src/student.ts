// Student sitting state machine: registration form -> one question per
// screen with free navigation -> final percent. Mirrors the server's
// session FSM; every confirmed selection is sent immediately and the
// server's last-write-wins semantics allow re-confirming.

import { GatewayClient, Question, TestResult } from "./api.js";

export type StudentPhase =
  | { kind: "registering" }
  | { kind: "answering" }
  | { kind: "done"; result: TestResult };

export class StudentSession {
  phase: StudentPhase = { kind: "registering" };
  sessionId = "";
  questions: Question[] = [];
  index = 0;
  private selections = new Map<string, Set<string>>();
  private confirmed = new Set<string>();
  onchange: () => void = () => {};

  constructor(private readonly api: GatewayClient) {}

  private changed() {
    this.onchange();
  }

  canRegister(name: string): boolean {
    return name.trim().length > 0;
  }

  async register(name: string, yearOfStudy: number, subject: string) {
    if (!this.canRegister(name)) {
      throw new Error("name must not be blank");
    }
    const grant = await this.api.register(name, yearOfStudy, subject);
    this.sessionId = grant.sessionId;
    const test = await this.api.start(this.sessionId);
    this.questions = test.questions;
    this.index = 0;
    this.phase = { kind: "answering" };
    this.changed();
  }

  current(): Question {
    return this.questions[this.index];
  }

  selectionFor(questionId: string): Set<string> {
    return this.selections.get(questionId) ?? new Set();
  }

  isConfirmed(questionId: string): boolean {
    return this.confirmed.has(questionId);
  }

  get answeredCount(): number {
    return this.confirmed.size;
  }

  get allAnswered(): boolean {
    return this.confirmed.size === this.questions.length;
  }

  // radio semantics for single (second pick replaces the first),
  // checkbox toggling for multi
  toggle(choiceId: string) {
    const question = this.current();
    const selection = this.selections.get(question.id) ?? new Set<string>();
    if (question.type === "single") {
      selection.clear();
      selection.add(choiceId);
    } else if (selection.has(choiceId)) {
      selection.delete(choiceId);
    } else {
      selection.add(choiceId);
    }
    this.selections.set(question.id, selection);
    this.confirmed.delete(question.id); // edited since last send
    this.changed();
  }

  canConfirm(): boolean {
    return (
      this.phase.kind === "answering" &&
      this.selectionFor(this.current().id).size > 0
    );
  }

  async confirmCurrent() {
    const question = this.current();
    const selected = [...this.selectionFor(question.id)].sort();
    await this.api.answer(this.sessionId, question.id, selected);
    this.confirmed.add(question.id);
    this.changed();
  }

  next() {
    if (this.index < this.questions.length - 1) {
      this.index += 1;
      this.changed();
    }
  }

  previous() {
    if (this.index > 0) {
      this.index -= 1;
      this.changed();
    }
  }

  goTo(index: number) {
    if (index >= 0 && index < this.questions.length) {
      this.index = index;
      this.changed();
    }
  }

  async finish() {
    const result = await this.api.finish(this.sessionId);
    this.phase = { kind: "done", result };
    this.changed();
  }
}
