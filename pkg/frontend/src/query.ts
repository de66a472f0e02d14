/**
 * Debounced query scheduling with stale-response dropping.
 *
 * Slider movement calls `request` on every input event; the scheduler
 * coalesces bursts into one HTTP query after a short quiet period,
 * keeps at most one request in flight by aborting the previous one,
 * and tags each request with a sequence number so a response that
 * arrives after a newer request has been issued is dropped instead of
 * clobbering fresher results.
 */

import { ApiClient, QueryResponse } from "./api.js";
import { MixerState, hasActiveWeight } from "./state.js";

export const DEBOUNCE_MS = 150;

export interface SchedulerEvents {
  /** A response for the newest issued request arrived. */
  onResults(response: QueryResponse, seq: number): void;
  /** The newest request failed (never called for superseded ones). */
  onError(error: unknown, seq: number): void;
  /** The state cannot be queried; show the hint, send nothing. */
  onValidation(message: string): void;
}

export class QueryScheduler {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private seq = 0;
  private controller: AbortController | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly events: SchedulerEvents,
    private readonly debounceMs: number = DEBOUNCE_MS,
  ) {}

  /** Sequence number of the most recently issued request. */
  get issued(): number {
    return this.seq;
  }

  request(state: MixerState): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (state.reference === null) {
      return; // nothing to query yet; the picker drives the first call
    }
    if (!hasActiveWeight(state)) {
      this.events.onValidation("set at least one weight");
      return;
    }
    const snapshot = {
      reference: state.reference,
      weights: { ...state.sliders },
      topK: state.topK,
    };
    this.timer = setTimeout(() => {
      this.timer = null;
      this.fire(snapshot);
    }, this.debounceMs);
  }

  private fire(snapshot: {
    reference: string;
    weights: Record<string, number>;
    topK: number;
  }): void {
    this.controller?.abort();
    this.controller = new AbortController();
    const seq = ++this.seq;
    this.client
      .query(
        snapshot.reference,
        snapshot.weights,
        snapshot.topK,
        this.controller.signal,
      )
      .then((response) => {
        if (seq === this.seq) {
          this.events.onResults(response, seq);
        }
      })
      .catch((error: unknown) => {
        if (seq !== this.seq) {
          return; // superseded; a newer request owns the screen
        }
        if (error instanceof DOMException && error.name === "AbortError") {
          return;
        }
        this.events.onError(error, seq);
      });
  }
}
