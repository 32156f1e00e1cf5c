/** Typed client for the prediction service.
 *
 * Faults always arrive as `{code, message, fields}` with one entry per
 * offending attribute; anything else that goes wrong on the wire is
 * surfaced as a NetworkError so callers can keep the form state intact.
 */

export interface AttributeDescriptor {
  name: string;
  kind: "numeric" | "categorical";
  modeled: boolean;
  categories: number[] | null;
  value_range: [number, number] | null;
}

export interface SchemaDoc {
  attributes: AttributeDescriptor[];
  classes: string[];
}

export interface PredictionResponse {
  predicted_class: string;
  class_index: number;
  score_kind: string;
  scores: Record<string, number>;
  probabilities?: Record<string, number>;
  votes?: Record<string, number>;
  model: { kind: string; digest: string };
}

export interface FaultField {
  name: string;
  message: string;
}

export interface FaultDoc {
  code: string;
  message: string;
  fields: FaultField[];
}

export class ServiceFault extends Error {
  readonly code: string;
  readonly fields: FaultField[];

  constructor(doc: FaultDoc) {
    super(doc.message);
    this.name = "ServiceFault";
    this.code = doc.code;
    this.fields = doc.fields ?? [];
  }
}

export class NetworkError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NetworkError";
  }
}

function isFaultDoc(value: unknown): value is FaultDoc {
  if (typeof value !== "object" || value === null) return false;
  const doc = value as Record<string, unknown>;
  return typeof doc.code === "string" && typeof doc.message === "string";
}

async function readJson(response: Response): Promise<unknown> {
  try {
    return await response.json();
  } catch {
    throw new NetworkError(`unreadable response (${response.status})`);
  }
}

async function request(path: string, init?: RequestInit): Promise<unknown> {
  let response: Response;
  try {
    response = await fetch(path, init);
  } catch (error) {
    if (error instanceof DOMException && error.name === "AbortError") throw error;
    throw new NetworkError("service unreachable");
  }
  const body = await readJson(response);
  if (!response.ok) {
    if (isFaultDoc(body)) throw new ServiceFault(body as FaultDoc);
    throw new NetworkError(`request failed (${response.status})`);
  }
  return body;
}

export async function fetchSchema(): Promise<SchemaDoc> {
  return (await request("/api/schema")) as SchemaDoc;
}

export async function fetchModelInfo(): Promise<Record<string, unknown>> {
  return (await request("/api/model-info")) as Record<string, unknown>;
}

export async function predict(
  payload: Record<string, number>,
  signal?: AbortSignal,
): Promise<PredictionResponse> {
  const body = await request("/api/predict", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
    signal,
  });
  return body as PredictionResponse;
}
