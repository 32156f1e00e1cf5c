/** Single-in-flight prediction requests with stale-response discard.
 *
 * Every call gets a sequence number; issuing a new request aborts the
 * previous one, and a response (or failure) is only reported when its
 * sequence number is still the latest. A superseded call resolves to
 * `{stale: true}` so callers can simply ignore it.
 */

import { predict, type PredictionResponse } from "./api";

export type PredictOutcome =
  | { stale: true }
  | { stale: false; response: PredictionResponse; error: null }
  | { stale: false; response: null; error: unknown };

export type PredictFn = (
  payload: Record<string, number>,
  signal?: AbortSignal,
) => Promise<PredictionResponse>;

export class Predictor {
  private sequence = 0;
  private controller: AbortController | null = null;
  private readonly call: PredictFn;

  constructor(call: PredictFn = predict) {
    this.call = call;
  }

  get inFlight(): boolean {
    return this.controller !== null;
  }

  async request(payload: Record<string, number>): Promise<PredictOutcome> {
    const ticket = ++this.sequence;
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      const response = await this.call(payload, controller.signal);
      if (ticket !== this.sequence) return { stale: true };
      this.controller = null;
      return { stale: false, response, error: null };
    } catch (error) {
      if (ticket !== this.sequence) return { stale: true };
      this.controller = null;
      if (error instanceof DOMException && error.name === "AbortError") {
        return { stale: true };
      }
      return { stale: false, response: null, error };
    }
  }
}
