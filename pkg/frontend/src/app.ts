// Live session view: prediction timeline, arm panel, click-to-correct.
//
// Interaction contract:
//   * approve button (New rows only)      -> {kind: "correct"}
//   * "new speaker" button                -> {kind: "wrong", correct_label: "New"}
//   * arm button for a different arm      -> {kind: "wrong", correct_label: arm}
//   * arm button for the shown choice     -> silence, nothing is sent
// Exactly one network message per explicit click, zero otherwise. The arm
// panel always re-renders from the latest server-reported arm list.

import { TimelineStore } from './timeline.js';
import {
  FeedbackError,
  FeedbackMessage,
  PredictionEvent,
  ServiceTransport,
  SessionConfig,
  StreamHandle,
} from './types.js';

export interface LiveViewOptions {
  windowSize?: number;
  maxTimelineRows?: number; // rendered rows (display only)
}

export class LiveView {
  readonly timeline: TimelineStore;
  private transport: ServiceTransport;
  private root: HTMLElement;
  private sessionId: string | null = null;
  private stream: StreamHandle | null = null;
  private armLabels: string[] = [];
  private selectedFrame: number | null = null;
  private inFlight = false;
  private queue: Array<{ message: FeedbackMessage; badge: string }> = [];
  private lastConfig: SessionConfig = {};
  private maxRows: number;

  constructor(root: HTMLElement, transport: ServiceTransport, opts: LiveViewOptions = {}) {
    this.root = root;
    this.transport = transport;
    this.timeline = new TimelineStore(opts.windowSize ?? 500);
    this.maxRows = opts.maxTimelineRows ?? 50;
    this.renderSkeleton();
  }

  async connect(config: SessionConfig = {}): Promise<void> {
    this.lastConfig = config;
    this.setStatus('connecting...');
    try {
      const session = await this.transport.createSession(config);
      this.sessionId = session.id;
      this.armLabels = session.arm_labels;
      this.stream = await this.transport.openStream(
        session.id,
        (event) => this.onEvent(event),
        (reason) => this.setStatus(`stream closed${reason ? `: ${reason}` : ''}`, true),
      );
      this.setStatus(`session ${session.id.slice(0, 8)} connected`);
      this.renderArmPanel();
    } catch (error) {
      this.setStatus(`connection failed: ${(error as Error).message}`, true);
      throw error;
    }
  }

  async disconnect(): Promise<void> {
    this.stream?.close();
    if (this.sessionId) {
      await this.transport.deleteSession(this.sessionId);
      this.sessionId = null;
    }
  }

  pushAudio(chunk: ArrayBuffer): void {
    this.stream?.sendAudio(chunk);
  }

  // -- user actions --------------------------------------------------------

  selectFrame(frameIndex: number): void {
    this.selectedFrame = frameIndex;
    this.renderTimeline();
    this.renderArmPanel();
  }

  /** Approve a New decision (valid only when the selected row chose New). */
  clickApprove(): void {
    const row = this.selectedRow();
    if (!row || row.event.chosen !== 'New') return;
    this.send({ frame_index: row.event.frame_index, kind: 'correct' }, 'approved');
  }

  /** Correct the selected frame to "an unregistered speaker is talking". */
  clickNewSpeaker(): void {
    const row = this.selectedRow();
    if (!row || row.event.chosen === 'New') return;
    this.send(
      { frame_index: row.event.frame_index, kind: 'wrong', correct_label: 'New' },
      '→ new speaker',
    );
  }

  /** Correct the selected frame to an existing arm; the shown choice is silence. */
  clickArm(label: string): void {
    const row = this.selectedRow();
    if (!row) return;
    if (label === row.event.chosen) return; // agreeing with the agent needs no message
    this.send(
      { frame_index: row.event.frame_index, kind: 'wrong', correct_label: label },
      `→ ${label}`,
    );
  }

  // -- internals ------------------------------------------------------------

  private selectedRow() {
    if (this.selectedFrame === null) return this.timeline.latest();
    return this.timeline.get(this.selectedFrame);
  }

  private onEvent(event: PredictionEvent): void {
    this.timeline.push(event);
    this.armLabels = event.arm_labels;
    this.renderTimeline();
    this.renderArmPanel();
  }

  private send(message: FeedbackMessage, badge: string): void {
    this.queue.push({ message, badge });
    this.timeline.attachBadge(message.frame_index, `${badge} (sending)`);
    this.renderTimeline();
    void this.drainQueue();
  }

  private async drainQueue(): Promise<void> {
    if (this.inFlight || !this.sessionId) return;
    const next = this.queue.shift();
    if (!next) return;
    this.inFlight = true;
    const { message, badge } = next;
    try {
      const ack = await this.transport.postFeedback(this.sessionId, message);
      this.armLabels = ack.arm_labels;
      const note = ack.registered ? `${badge} (+${ack.registered})` : badge;
      this.timeline.attachBadge(message.frame_index, ack.applied ? note : `${badge} (noted)`);
    } catch (error) {
      const detail =
        error instanceof FeedbackError && error.status === 410
          ? 'too late to correct this frame'
          : (error as Error).message;
      this.timeline.attachError(message.frame_index, detail);
    } finally {
      this.inFlight = false;
      this.renderTimeline();
      this.renderArmPanel();
      if (this.queue.length > 0) void this.drainQueue();
    }
  }

  // -- rendering -----------------------------------------------------------

  private renderSkeleton(): void {
    this.root.innerHTML = `
      <div class="status" data-role="status"></div>
      <button data-role="retry" hidden>retry</button>
      <div class="panel" data-role="arm-panel"></div>
      <ol class="timeline" data-role="timeline"></ol>
    `;
    const retry = this.root.querySelector<HTMLButtonElement>('[data-role="retry"]');
    retry?.addEventListener('click', () => void this.connect(this.lastConfig));
  }

  private setStatus(text: string, failed = false): void {
    const status = this.root.querySelector<HTMLElement>('[data-role="status"]');
    const retry = this.root.querySelector<HTMLButtonElement>('[data-role="retry"]');
    if (status) {
      status.textContent = text;
      status.classList.toggle('error', failed);
    }
    if (retry) retry.hidden = !failed;
  }

  private renderTimeline(): void {
    const list = this.root.querySelector<HTMLElement>('[data-role="timeline"]');
    if (!list) return;
    list.innerHTML = '';
    for (const row of this.timeline.rows.slice(-this.maxRows)) {
      const item = document.createElement('li');
      item.dataset.frame = String(row.event.frame_index);
      item.classList.toggle('selected', row.event.frame_index === this.selectedFrame);
      const badge = row.error
        ? ` <span class="error">${row.error}</span>`
        : row.badge
          ? ` <span class="badge">${row.badge}</span>`
          : '';
      item.innerHTML = `<span class="frame">#${row.event.frame_index}</span> ` +
        `<span class="chosen">${row.event.chosen}</span>${badge}`;
      item.addEventListener('click', () => this.selectFrame(row.event.frame_index));
      list.appendChild(item);
    }
  }

  private renderArmPanel(): void {
    const panel = this.root.querySelector<HTMLElement>('[data-role="arm-panel"]');
    if (!panel) return;
    panel.innerHTML = '';
    const row = this.selectedRow();

    const approve = document.createElement('button');
    approve.dataset.action = 'approve';
    approve.textContent = 'approve new speaker';
    approve.disabled = !row || row.event.chosen !== 'New';
    approve.addEventListener('click', () => this.clickApprove());
    panel.appendChild(approve);

    const newSpeaker = document.createElement('button');
    newSpeaker.dataset.action = 'new-speaker';
    newSpeaker.textContent = 'new speaker';
    newSpeaker.disabled = !row || row.event.chosen === 'New';
    newSpeaker.addEventListener('click', () => this.clickNewSpeaker());
    panel.appendChild(newSpeaker);

    for (const label of this.armLabels) {
      if (label === 'New') continue; // covered by the two buttons above
      const button = document.createElement('button');
      button.dataset.arm = label;
      button.textContent = label;
      button.addEventListener('click', () => this.clickArm(label));
      panel.appendChild(button);
    }
  }
}
