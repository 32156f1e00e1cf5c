/** Shared fixtures for the webui tests: a schema doc shaped exactly like
 * the service's /api/schema payload, plus small async utilities.
 */

import type { AttributeDescriptor, PredictionResponse, SchemaDoc } from "../src/api";

type Row = [string, "numeric" | "categorical", boolean, number[] | null, [number, number] | null];

const LAYOUT: Row[] = [
  ["reason_for_absence", "categorical", true, [0, 1, 5, 13, 19, 23, 26, 28], null],
  ["transportation_expense", "numeric", true, null, [118, 388]],
  ["distance_to_work", "numeric", true, null, [5, 52]],
  ["age", "numeric", true, null, [27, 58]],
  ["work_load_avg_per_day", "numeric", true, null, [205.917, 378.884]],
  ["education", "categorical", true, [1, 2, 3, 4], null],
  ["son", "numeric", true, null, [0, 4]],
  ["social_drinker", "numeric", true, null, [0, 1]],
  ["social_smoker", "numeric", true, null, [0, 1]],
  ["pet", "numeric", true, null, [0, 8]],
  ["weight", "numeric", true, null, [56, 108]],
  ["height", "numeric", false, null, [163, 196]],
  ["body_mass_index", "numeric", true, null, [19, 38]],
];

export function makeSchema(): SchemaDoc {
  const attributes: AttributeDescriptor[] = LAYOUT.map(
    ([name, kind, modeled, categories, value_range]) => ({
      name,
      kind,
      modeled,
      categories,
      value_range,
    }),
  );
  return { attributes, classes: ["A+", "B+", "C+"] };
}

/** One raw input string per attribute, all parseable and in range. */
export function validRaw(): Record<string, string> {
  return {
    reason_for_absence: "19",
    transportation_expense: "225",
    distance_to_work: "26",
    age: "36",
    work_load_avg_per_day: "271.219",
    education: "1",
    son: "2",
    social_drinker: "1",
    social_smoker: "0",
    pet: "1",
    weight: "80",
    height: "172",
    body_mass_index: "27",
  };
}

export function makeResponse(
  overrides: Partial<PredictionResponse> = {},
): PredictionResponse {
  return {
    predicted_class: "B+",
    class_index: 1,
    score_kind: "probabilities",
    scores: { "A+": 0.1, "B+": 0.85, "C+": 0.05 },
    probabilities: { "A+": 0.1, "B+": 0.85, "C+": 0.05 },
    model: { kind: "mlr", digest: "f".repeat(64) },
    ...overrides,
  };
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (reason: unknown) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (reason: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
