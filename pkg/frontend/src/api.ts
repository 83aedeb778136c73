// Scoring client: debounces bursts of edits into one request and drops stale
// responses by sequence number, so the displayed score always reflects the
// latest configuration that reached the service.

import { ConfigDoc, ScoreReport } from './schema.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ScoreOutcome {
  report?: ScoreReport;
  error?: string;
  stale?: boolean;
}

export class ScoreClient {
  private seq = 0;
  private applied = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = fetch,
    private debounceMs = 150,
  ) {}

  /** Immediate, un-debounced scoring (used by load-config and tests). */
  async score(doc: ConfigDoc): Promise<ScoreOutcome> {
    const seq = ++this.seq;
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/api/v1/score`, {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify(doc),
      });
    } catch (exc) {
      return this.finish(seq, { error: `service unreachable: ${String(exc)}` });
    }
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const message = body && typeof body.message === 'string'
        ? body.message
        : `scoring failed with status ${response.status}`;
      return this.finish(seq, { error: message });
    }
    return this.finish(seq, { report: body as ScoreReport });
  }

  /** Debounced scoring for live edits; only the last burst member fires. */
  scoreDebounced(doc: ConfigDoc, onDone: (outcome: ScoreOutcome) => void): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.score(doc).then(onDone);
    }, this.debounceMs);
  }

  private finish(seq: number, outcome: ScoreOutcome): ScoreOutcome {
    if (seq < this.applied) return { ...outcome, stale: true };
    this.applied = seq;
    return outcome;
  }

  async health(): Promise<boolean> {
    try {
      const r = await this.fetchFn(`${this.baseUrl}/api/v1/health`);
      return r.ok;
    } catch {
      return false;
    }
  }

  async criticalValues(technology: string): Promise<unknown | null> {
    try {
      const r = await this.fetchFn(`${this.baseUrl}/api/v1/critical-values/${technology}`);
      return r.ok ? await r.json() : null;
    } catch {
      return null;
    }
  }
}
