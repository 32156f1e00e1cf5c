/** DOM wiring: schema-driven form, result scale, what-if re-prediction.
 *
 * The form is generated from /api/schema on every load; nothing about
 * the 13 attributes is hard-coded here. After the first successful
 * prediction, any field edit re-predicts automatically; responses are
 * routed through a Predictor so only the newest request can win.
 */

import {
  NetworkError,
  ServiceFault,
  fetchSchema,
  type PredictionResponse,
  type SchemaDoc,
} from "./api";
import {
  allValid,
  applyServerFaults,
  buildForm,
  clearServerFaults,
  displayName,
  payload,
  rangeHint,
  setFieldValue,
  type FormState,
} from "./form";
import { Predictor, type PredictFn } from "./predictor";

export interface MountOptions {
  loadSchema?: () => Promise<SchemaDoc>;
  predictFn?: PredictFn;
  debounceMs?: number;
}

export interface AppHandle {
  state: FormState;
  /** Programmatic field edit; triggers the same path as a DOM event. */
  change(name: string, raw: string): Promise<void>;
  /** Programmatic predict; same path as pressing the button. */
  submit(): Promise<void>;
  lastResponse(): PredictionResponse | null;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderRetry(root: HTMLElement, detail: string, retry: () => void): void {
  root.textContent = "";
  const box = el("div", "load-error");
  box.appendChild(el("h1", undefined, "Absenteeism decision support"));
  box.appendChild(el("p", "error-detail", `Could not load the attribute schema: ${detail}`));
  const button = el("button", "retry", "Retry");
  button.addEventListener("click", retry);
  box.appendChild(button);
  root.appendChild(box);
}

export async function mountApp(
  root: HTMLElement,
  options: MountOptions = {},
): Promise<AppHandle> {
  const loadSchema = options.loadSchema ?? fetchSchema;
  const debounceMs = options.debounceMs ?? 250;

  let schema: SchemaDoc;
  try {
    schema = await loadSchema();
  } catch (error) {
    const detail = error instanceof Error ? error.message : String(error);
    await new Promise<void>((resolve) => {
      renderRetry(root, detail, resolve);
    });
    return mountApp(root, options);
  }

  const state = buildForm(schema);
  const predictor = new Predictor(options.predictFn);
  let last: PredictionResponse | null = null;
  let submitted = false;
  let debounceTimer: ReturnType<typeof setTimeout> | null = null;

  root.textContent = "";
  const banner = el("div", "banner hidden");
  banner.setAttribute("role", "alert");
  const form = el("form", "candidate-form");
  form.addEventListener("submit", (event) => event.preventDefault());
  const result = el("section", "result empty");

  root.appendChild(el("h1", undefined, "Absenteeism decision support"));
  root.appendChild(banner);
  root.appendChild(form);
  root.appendChild(result);

  const inputs = new Map<string, HTMLInputElement | HTMLSelectElement>();
  const errorSlots = new Map<string, HTMLElement>();

  for (const name of state.order) {
    const field = state.fields.get(name)!;
    const row = el("div", "field-row");
    row.dataset.field = name;

    const label = el("label", undefined, displayName(name));
    label.htmlFor = `field-${name}`;
    row.appendChild(label);

    let input: HTMLInputElement | HTMLSelectElement;
    if (field.descriptor.kind === "categorical") {
      const select = el("select");
      const blank = el("option", undefined, "choose...");
      blank.value = "";
      select.appendChild(blank);
      for (const category of field.descriptor.categories ?? []) {
        const option = el("option", undefined, String(category));
        option.value = String(category);
        select.appendChild(option);
      }
      input = select;
    } else {
      const numeric = el("input");
      numeric.type = "number";
      numeric.step = "any";
      input = numeric;
    }
    input.id = `field-${name}`;
    row.appendChild(input);

    const hint = rangeHint(field.descriptor);
    if (hint) row.appendChild(el("span", "hint", hint));

    const errorSlot = el("span", "field-error");
    errorSlot.dataset.errorFor = name;
    row.appendChild(errorSlot);

    input.addEventListener("input", () => {
      void onChange(name, input.value);
    });
    input.addEventListener("change", () => {
      void onChange(name, input.value);
    });

    inputs.set(name, input);
    errorSlots.set(name, errorSlot);
    form.appendChild(row);
  }

  const button = el("button", "predict", "Predict");
  button.type = "submit";
  button.disabled = true;
  button.addEventListener("click", () => {
    void submit();
  });
  form.appendChild(button);

  function showBanner(message: string): void {
    banner.textContent = message;
    banner.classList.remove("hidden");
  }

  function hideBanner(): void {
    banner.classList.add("hidden");
  }

  function refreshFieldErrors(): void {
    for (const [name, slot] of errorSlots) {
      const field = state.fields.get(name)!;
      let message = "";
      if (field.serverError) {
        message = field.serverError;
      } else if (field.error && field.error !== "required" && field.raw !== "") {
        message = field.error;
      } else if (field.error && submitted) {
        message = field.error;
      }
      slot.textContent = message;
      inputs.get(name)!.classList.toggle("invalid", message !== "");
    }
    button.disabled = !allValid(state);
  }

  function renderResult(response: PredictionResponse, previous: string | null): void {
    result.textContent = "";
    result.classList.remove("empty");

    const scale = el("div", "class-scale");
    for (const label of schema.classes) {
      const pill = el("span", "class-pill", label);
      pill.dataset.class = label;
      if (label === response.predicted_class) pill.classList.add("predicted");
      scale.appendChild(pill);
    }
    result.appendChild(scale);

    if (previous !== null && previous !== response.predicted_class) {
      result.appendChild(
        el("p", "diff", `changed from ${previous} to ${response.predicted_class}`),
      );
    } else if (previous !== null) {
      result.appendChild(el("p", "diff unchanged", "unchanged"));
    }

    if (response.probabilities) {
      const bars = el("div", "probability-bars");
      for (const label of schema.classes) {
        const value = response.probabilities[label] ?? 0;
        const row = el("div", "bar-row");
        row.dataset.barFor = label;
        row.appendChild(el("span", "bar-label", label));
        const track = el("span", "bar-track");
        const fill = el("span", "bar-fill");
        fill.style.width = `${(value * 100).toFixed(1)}%`;
        track.appendChild(fill);
        row.appendChild(track);
        row.appendChild(el("span", "bar-value", `${(value * 100).toFixed(1)}%`));
        bars.appendChild(row);
      }
      result.appendChild(bars);
    } else {
      result.appendChild(
        el("p", "score-kind", `scores (${response.score_kind.replace(/_/g, " ")})`),
      );
    }
  }

  async function submit(): Promise<void> {
    submitted = true;
    refreshFieldErrors();
    if (!allValid(state)) return;

    clearServerFaults(state);
    button.classList.add("busy");
    const outcome = await predictor.request(payload(state));
    button.classList.remove("busy");
    if (outcome.stale) return;

    if (outcome.error !== null || outcome.response === null) {
      const error = outcome.error;
      if (error instanceof ServiceFault) {
        const unmatched = applyServerFaults(state, error.fields);
        refreshFieldErrors();
        if (unmatched.length > 0 || error.fields.length === 0) {
          showBanner(`${error.message}${unmatched.length ? ": " + unmatched.join("; ") : ""}`);
        } else {
          hideBanner();
        }
      } else if (error instanceof NetworkError) {
        showBanner(`Prediction unavailable: ${error.message}. Your inputs are unchanged.`);
      } else {
        showBanner("Prediction failed unexpectedly.");
      }
      return;
    }

    hideBanner();
    refreshFieldErrors();
    const previous = last?.predicted_class ?? null;
    renderResult(outcome.response, previous);
    last = outcome.response;
  }

  async function onChange(name: string, raw: string): Promise<void> {
    setFieldValue(state, name, raw);
    refreshFieldErrors();
    if (last === null || !allValid(state)) return;
    // What-if mode: re-predict automatically once a result exists.
    if (debounceTimer !== null) clearTimeout(debounceTimer);
    if (debounceMs === 0) {
      await submit();
      return;
    }
    debounceTimer = setTimeout(() => {
      void submit();
    }, debounceMs);
  }

  return {
    state,
    async change(name: string, raw: string): Promise<void> {
      const input = inputs.get(name);
      if (input) input.value = raw;
      await onChange(name, raw);
    },
    submit,
    lastResponse: () => last,
  };
}
