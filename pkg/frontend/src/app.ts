// DOM layer: renders the student testing view and the professor
// monitor dashboard into a root element. All state lives in the
// machines from student.ts / monitor.ts; this file only paints and
// forwards clicks.

import { GatewayClient, GatewayError, Question } from "./api.js";
import { MonitorConnection } from "./monitor.js";
import { StudentSession } from "./student.js";

function esc(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const STATE_LABEL: Record<string, string> = {
  registered: "Registered",
  in_progress: "In progress",
  completed: "Completed",
};

const TEMPLATE = `
<div id="banner-area"></div>
<nav>
  <a href="#student" id="nav-student">Testing</a>
  <a href="#monitor" id="nav-monitor">Monitor</a>
</nav>

<section id="student-view">
  <form id="register-form">
    <h1>Start a test</h1>
    <label>Name <input id="student-name" autocomplete="name"></label>
    <label>Year of study <input id="student-year" type="number" min="1" max="9" value="1"></label>
    <label>Subject <input id="student-subject"></label>
    <button id="register-submit" type="submit" disabled>Begin</button>
  </form>

  <div id="test-card" hidden>
    <div id="progress"></div>
    <h2 id="question-text"></h2>
    <div id="choices"></div>
    <div class="controls">
      <button id="prev-btn" type="button">Previous</button>
      <button id="confirm-btn" type="button" disabled>Confirm answer</button>
      <button id="next-btn" type="button">Next</button>
      <button id="finish-btn" type="button">Finish test</button>
    </div>
  </div>

  <div id="result-modal" class="modal" role="dialog" hidden>
    <div class="modal-box">
      <h2>Your result</h2>
      <p id="result-percent"></p>
      <p id="result-points"></p>
      <button id="result-close" type="button">Close</button>
    </div>
  </div>
</section>

<section id="monitor-view" hidden>
  <form id="monitor-login">
    <h1>Live supervision</h1>
    <label>User <input id="monitor-user"></label>
    <label>Password <input id="monitor-password" type="password"></label>
    <button id="monitor-connect" type="submit">Connect</button>
    <p id="monitor-error" class="error" hidden></p>
  </form>
  <div id="monitor-dashboard" hidden>
    <p id="monitor-status"></p>
    <p id="monitor-empty">No sessions yet.</p>
    <table id="monitor-table">
      <thead><tr>
        <th>Session</th><th>Name</th><th>Subject</th>
        <th>State</th><th>Answered</th><th>Percent</th>
      </tr></thead>
      <tbody id="monitor-rows"></tbody>
    </table>
  </div>
</section>
`;

export function mountApp(root: HTMLElement, api: GatewayClient) {
  root.innerHTML = TEMPLATE;
  const el = <T extends HTMLElement>(id: string) =>
    root.querySelector<T>("#" + id)!;

  const doc = root.ownerDocument;
  const banners = el("banner-area");

  function showBanner(error: unknown) {
    const banner = doc.createElement("div");
    banner.className = "banner";
    const code = error instanceof GatewayError ? error.code : "E_CLIENT";
    const message = error instanceof Error ? error.message : String(error);
    banner.textContent = `${code}: ${message}`;
    const dismiss = doc.createElement("button");
    dismiss.textContent = "×";
    dismiss.onclick = () => banner.remove();
    banner.appendChild(dismiss);
    banners.appendChild(banner);
    setTimeout(() => banner.remove(), 8000);
  }

  const guarded =
    (action: () => Promise<void> | void) =>
    (event?: Event) => {
      event?.preventDefault();
      Promise.resolve()
        .then(action)
        .catch((error) => showBanner(error));
    };

  // --- student view -------------------------------------------------

  const student = new StudentSession(api);
  const nameInput = el<HTMLInputElement>("student-name");
  const yearInput = el<HTMLInputElement>("student-year");
  const subjectInput = el<HTMLInputElement>("student-subject");
  const registerSubmit = el<HTMLButtonElement>("register-submit");
  const confirmBtn = el<HTMLButtonElement>("confirm-btn");

  nameInput.addEventListener("input", () => {
    registerSubmit.disabled = !student.canRegister(nameInput.value);
  });

  el<HTMLFormElement>("register-form").addEventListener(
    "submit",
    guarded(async () => {
      await student.register(
        nameInput.value.trim(),
        Number(yearInput.value) || 1,
        subjectInput.value.trim(),
      );
    }),
  );

  function renderChoices(question: Question) {
    const selection = student.selectionFor(question.id);
    const box = el("choices");
    box.innerHTML = question.choices
      .map((choice) => {
        const kind = question.type === "single" ? "radio" : "checkbox";
        const checked = selection.has(choice.id) ? " checked" : "";
        return (
          `<label class="choice"><input type="${kind}" name="choice" ` +
          `value="${esc(choice.id)}"${checked}> ${esc(choice.text)}</label>`
        );
      })
      .join("");
    for (const input of box.querySelectorAll("input")) {
      input.addEventListener("change", () =>
        student.toggle((input as HTMLInputElement).value),
      );
    }
  }

  function renderStudent() {
    const registering = student.phase.kind === "registering";
    el("register-form").hidden = !registering;
    el("test-card").hidden = registering;
    if (student.phase.kind === "answering") {
      const question = student.current();
      el("progress").textContent =
        `Question ${student.index + 1} of ${student.questions.length}` +
        ` · ${student.answeredCount} answered` +
        (student.isConfirmed(question.id) ? " · saved" : "");
      el("question-text").textContent =
        `${question.text} (${question.points} pt)`;
      renderChoices(question);
      confirmBtn.disabled = !student.canConfirm();
      el<HTMLButtonElement>("prev-btn").disabled = student.index === 0;
      el<HTMLButtonElement>("next-btn").disabled =
        student.index === student.questions.length - 1;
    }
    if (student.phase.kind === "done") {
      el("test-card").hidden = true;
      el("result-modal").hidden = false;
      el("result-percent").textContent = `${student.phase.result.percent}%`;
      el("result-points").textContent =
        `${student.phase.result.points} of ` +
        `${student.phase.result.max_points} points`;
    }
  }

  student.onchange = renderStudent;
  el("prev-btn").addEventListener("click", () => student.previous());
  el("next-btn").addEventListener("click", () => student.next());
  el("confirm-btn").addEventListener(
    "click",
    guarded(() => student.confirmCurrent()),
  );
  el("finish-btn").addEventListener(
    "click",
    guarded(() => student.finish()),
  );
  el("result-close").addEventListener("click", () => {
    el("result-modal").hidden = true;
  });

  // --- monitor view ---------------------------------------------------

  const monitor = new MonitorConnection(api);

  function renderRow(summary: {
    session_id: string;
    name: string;
    subject: string;
    state: string;
    answered_count: number;
    percent?: string;
  }) {
    const tbody = el("monitor-rows");
    let row = tbody.querySelector<HTMLTableRowElement>(
      `tr[data-session-id="${summary.session_id}"]`,
    );
    if (!row) {
      row = doc.createElement("tr");
      row.dataset.sessionId = summary.session_id;
      row.innerHTML = "<td></td><td></td><td></td><td></td><td></td><td></td>";
      tbody.appendChild(row);
    }
    const cells = row.children;
    cells[0].textContent = summary.session_id;
    cells[1].textContent = summary.name;
    cells[2].textContent = summary.subject;
    cells[3].textContent = STATE_LABEL[summary.state] ?? summary.state;
    cells[4].textContent = String(summary.answered_count);
    cells[5].textContent = summary.percent ?? "";
  }

  function renderMonitor() {
    const connected = monitor.status === "live" || monitor.status === "connecting";
    el("monitor-login").hidden = connected;
    el("monitor-dashboard").hidden = !connected;
    const errorBox = el("monitor-error");
    errorBox.hidden = monitor.status !== "auth-failed";
    if (monitor.status === "auth-failed") {
      errorBox.textContent = `Sign-in failed: ${monitor.lastError}`;
    }
    el("monitor-status").textContent =
      monitor.status === "live" ? "live" : monitor.status;
    el("monitor-empty").hidden = monitor.model.size > 0;
    for (const summary of monitor.model.ordered()) {
      renderRow(summary);
    }
  }

  monitor.onchange = renderMonitor;
  el<HTMLFormElement>("monitor-login").addEventListener(
    "submit",
    guarded(async () => {
      try {
        await monitor.connect(
          el<HTMLInputElement>("monitor-user").value,
          el<HTMLInputElement>("monitor-password").value,
        );
      } catch {
        // login form stays visible; renderMonitor shows the message
      }
    }),
  );

  // --- routing --------------------------------------------------------

  function route() {
    const monitorFace = (doc.defaultView?.location.hash ?? "") === "#monitor";
    el("monitor-view").hidden = !monitorFace;
    el("student-view").hidden = monitorFace;
  }
  doc.defaultView?.addEventListener("hashchange", route);
  route();
  renderStudent();
  renderMonitor();

  return { student, monitor };
}
