// Rolling window of prediction events with attached feedback badges.

import { PredictionEvent } from './types.js';

export interface TimelineRow {
  event: PredictionEvent;
  badge?: string; // feedback already attached to this frame
  error?: string; // inline service rejection
}

/**
 * Keeps the most recent `windowSize` rows in frame order. Rows that scroll
 * out of the window are dropped (they are no longer correctable anyway).
 */
export class TimelineStore {
  readonly rows: TimelineRow[] = [];

  constructor(readonly windowSize: number) {}

  push(event: PredictionEvent): void {
    this.rows.push({ event });
    while (this.rows.length > this.windowSize) {
      this.rows.shift();
    }
  }

  get(frameIndex: number): TimelineRow | undefined {
    return this.rows.find((row) => row.event.frame_index === frameIndex);
  }

  attachBadge(frameIndex: number, badge: string): boolean {
    const row = this.get(frameIndex);
    if (!row) return false;
    row.badge = badge;
    row.error = undefined;
    return true;
  }

  attachError(frameIndex: number, message: string): boolean {
    const row = this.get(frameIndex);
    if (!row) return false;
    row.error = message;
    return true;
  }

  latest(): TimelineRow | undefined {
    return this.rows[this.rows.length - 1];
  }
}
