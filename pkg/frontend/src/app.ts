// Application wiring. The page is a pure client: all state lives on the
// service, and the session id is kept in the URL hash so a reload re-renders
// the same transcript from GET /sessions/{id}.

import { ApiClient, ApiError, NetworkError, type Api } from "./api.js";
import { renderDocuments, renderTranscript, renderTurn } from "./render.js";
import type { ChatTurnData } from "./types.js";

export interface AppHandle {
  ready: Promise<void>;
  root: HTMLElement;
  form: HTMLFormElement;
  input: HTMLInputElement;
  button: HTMLButtonElement;
  submit(query: string): Promise<void>;
}

function readSessionHash(): string | null {
  const match = /^#s=(.+)$/.exec(location.hash);
  return match ? decodeURIComponent(match[1]) : null;
}

function writeSessionHash(sessionId: string): void {
  location.hash = "#s=" + encodeURIComponent(sessionId);
}

export function initApp(root: HTMLElement, client: Api): AppHandle {
  root.textContent = "";

  const sidebar = document.createElement("aside");
  sidebar.className = "sidebar";
  const main = document.createElement("main");
  main.className = "chat";
  root.appendChild(sidebar);
  root.appendChild(main);

  const status = document.createElement("p");
  status.className = "status";
  main.appendChild(status);

  const transcriptBox = document.createElement("div");
  transcriptBox.className = "transcript-box";
  main.appendChild(transcriptBox);

  // single container shared by boot and submit so a reload rebuilds the
  // exact same DOM from GET /sessions/{id}
  let transcriptEl: HTMLElement = renderTranscript([]);
  transcriptBox.appendChild(transcriptEl);

  function setTranscript(turns: ChatTurnData[]): void {
    const fresh = renderTranscript(turns);
    transcriptEl.replaceWith(fresh);
    transcriptEl = fresh;
  }

  const banner = document.createElement("div");
  banner.className = "banner";
  banner.hidden = true;
  main.appendChild(banner);

  const form = document.createElement("form");
  form.className = "composer";
  const input = document.createElement("input");
  input.type = "text";
  input.placeholder = "Ask about the papers...";
  const button = document.createElement("button");
  button.type = "submit";
  button.textContent = "Send";
  form.appendChild(input);
  form.appendChild(button);
  main.appendChild(form);

  let sessionId: string | null = null;
  let inFlight = false;

  function clearBanner(): void {
    banner.hidden = true;
    banner.textContent = "";
  }

  function showError(err: unknown, retry?: () => void): void {
    banner.hidden = false;
    banner.textContent = "";
    const text = document.createElement("span");
    if (err instanceof ApiError) {
      banner.className = "banner error";
      const stage = err.stage ? ` (stage: ${err.stage})` : "";
      text.textContent = `${err.code}: ${err.message}${stage}`;
    } else if (err instanceof NetworkError) {
      banner.className = "banner network";
      text.textContent = `network failure: ${err.message}`;
    } else {
      banner.className = "banner error";
      text.textContent = String(err);
    }
    banner.appendChild(text);
    if (retry) {
      const again = document.createElement("button");
      again.type = "button";
      again.className = "retry";
      again.textContent = "Retry";
      again.addEventListener("click", () => {
        clearBanner();
        retry();
      });
      banner.appendChild(again);
    }
  }

  async function submit(query: string): Promise<void> {
    const trimmed = query.trim();
    if (!trimmed || inFlight || sessionId === null) return;
    inFlight = true;
    button.disabled = true;
    clearBanner();
    try {
      const turn = await client.postMessage(sessionId, trimmed);
      transcriptEl.appendChild(renderTurn(turn));
      input.value = "";
    } catch (err) {
      if (err instanceof NetworkError) {
        showError(err, () => void submit(trimmed));
      } else {
        showError(err);
      }
    } finally {
      inFlight = false;
      button.disabled = false;
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void submit(input.value);
  });

  async function boot(): Promise<void> {
    try {
      const health = await client.healthz();
      status.textContent = health.mock_mode ? "connected (mock mode)" : "connected";
      status.classList.add("ok");
    } catch (err) {
      status.textContent = "service unreachable";
      status.classList.add("down");
      showError(err, () => void boot());
      return;
    }

    try {
      const docs = await client.listDocuments();
      sidebar.textContent = "";
      sidebar.appendChild(renderDocuments(docs));
    } catch (err) {
      showError(err);
    }

    const existing = readSessionHash();
    if (existing !== null) {
      try {
        const transcript = await client.getTranscript(existing);
        sessionId = transcript.session_id;
        setTranscript(transcript.turns);
        return;
      } catch (err) {
        // stale hash: fall through to a fresh session unless the network is down
        if (err instanceof NetworkError) {
          showError(err, () => void boot());
          return;
        }
      }
    }
    try {
      const created = await client.createSession();
      sessionId = created.session_id;
      writeSessionHash(sessionId);
      setTranscript([]);
    } catch (err) {
      showError(err, () => void boot());
    }
  }

  return { ready: boot(), root, form, input, button, submit };
}

const mount = typeof document !== "undefined" ? document.getElementById("app") : null;
if (mount) {
  const fromQuery = new URLSearchParams(location.search).get("api");
  const base = mount.dataset.base || fromQuery || "http://127.0.0.1:8000";
  initApp(mount, new ApiClient(base));
}
