import { ask, health, stats, ServiceError, NO_STORE_STATUS } from "./api";
import {
  renderAnswer,
  renderError,
  renderNoStoreNotice,
  renderQuestion,
  renderStatus,
} from "./render";
import {
  MAX_K,
  MIN_K,
  loadAddress,
  saveAddress,
  validateAddress,
  validateK,
} from "./settings";

const log = document.getElementById("log") as HTMLDivElement;
const form = document.getElementById("ask-form") as HTMLFormElement;
const questionInput = document.getElementById("question") as HTMLInputElement;
const sendButton = document.getElementById("send") as HTMLButtonElement;
const kSelect = document.getElementById("k") as HTMLSelectElement;
const kMessage = document.getElementById("k-message") as HTMLSpanElement;
const addressInput = document.getElementById("address") as HTMLInputElement;
const addressMessage = document.getElementById("address-message") as HTMLSpanElement;
const statusLine = document.getElementById("status") as HTMLDivElement;

let address = loadAddress(window.localStorage);
let inFlight = false;
let lastQuestion = "";

for (let k = MIN_K; k <= MAX_K; k++) {
  const option = document.createElement("option");
  option.value = String(k);
  option.textContent = String(k);
  if (k === 3) option.selected = true;
  kSelect.appendChild(option);
}
addressInput.value = address;

function append(html: string): void {
  log.insertAdjacentHTML("beforeend", html);
  log.scrollTop = log.scrollHeight;
}

function setBusy(busy: boolean): void {
  inFlight = busy;
  questionInput.disabled = busy;
  sendButton.disabled = busy;
}

async function refreshStatus(): Promise<void> {
  try {
    const h = await health(address);
    const s = h.store_loaded ? await stats(address) : null;
    statusLine.textContent = renderStatus(address, h.store_loaded, s);
    statusLine.className = "status ok";
  } catch (err) {
    statusLine.textContent = err instanceof ServiceError ? err.detail : String(err);
    statusLine.className = "status down";
  }
}

async function sendQuestion(question: string): Promise<void> {
  if (inFlight) return;
  const k = validateK(kSelect.value);
  if (k === null) {
    kMessage.textContent = `k must be between ${MIN_K} and ${MAX_K}`;
    return;
  }
  kMessage.textContent = "";
  lastQuestion = question;
  append(renderQuestion(question));
  setBusy(true);
  try {
    const response = await ask(address, question, k);
    append(renderAnswer(response));
  } catch (err) {
    if (err instanceof ServiceError && err.status === NO_STORE_STATUS) {
      append(renderNoStoreNotice(err.detail));
    } else if (err instanceof ServiceError) {
      append(renderError(err.detail));
    } else {
      append(renderError(String(err)));
    }
  } finally {
    setBusy(false);
    questionInput.focus();
  }
}

form.addEventListener("submit", (event) => {
  event.preventDefault();
  const question = questionInput.value.trim();
  if (!question) return;
  questionInput.value = "";
  void sendQuestion(question);
});

log.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  if (target.classList.contains("retry") && lastQuestion && !inFlight) {
    void sendQuestion(lastQuestion);
  }
});

addressInput.addEventListener("change", () => {
  const valid = validateAddress(addressInput.value);
  if (valid === null) {
    addressMessage.textContent = "enter a http(s) URL like http://127.0.0.1:8077";
    return;
  }
  addressMessage.textContent = "";
  address = valid;
  addressInput.value = valid;
  saveAddress(window.localStorage, valid);
  void refreshStatus();
});

void refreshStatus();
