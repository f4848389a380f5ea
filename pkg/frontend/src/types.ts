// Wire types mirroring the live service's JSON payloads.

export interface SessionConfig {
  agent?: string;
  mode?: string;
  oracle_speakers?: number | null;
  ucb_c?: number;
  pending_window?: number;
}

export interface SessionInfo {
  id: string;
  created_at: number;
  config: Record<string, unknown>;
  arm_labels: string[];
}

export interface PredictionEvent {
  frame_index: number;
  chosen: string;
  scores: number[];
  arm_labels: string[];
}

export interface FeedbackMessage {
  frame_index: number;
  kind: 'correct' | 'wrong';
  correct_label?: string;
}

export interface FeedbackAck {
  applied: boolean;
  registered: string | null;
  arm_labels: string[];
}

export interface StreamHandle {
  sendAudio(chunk: ArrayBuffer): void;
  close(): void;
}

/** Injectable service client so views can be driven by a scripted fake. */
export interface ServiceTransport {
  createSession(config: SessionConfig): Promise<SessionInfo>;
  openStream(
    sessionId: string,
    onEvent: (event: PredictionEvent) => void,
    onClose?: (reason?: string) => void,
  ): Promise<StreamHandle>;
  postFeedback(sessionId: string, feedback: FeedbackMessage): Promise<FeedbackAck>;
  deleteSession(sessionId: string): Promise<void>;
}

/** Feedback rejected by the service (stale frame, unknown arm, ...). */
export class FeedbackError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = 'FeedbackError';
  }
}
