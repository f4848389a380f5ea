// HTTP + WebSocket client for the live diarization service.

import {
  FeedbackAck,
  FeedbackError,
  FeedbackMessage,
  PredictionEvent,
  ServiceTransport,
  SessionConfig,
  SessionInfo,
  StreamHandle,
} from './types.js';

export class HttpTransport implements ServiceTransport {
  constructor(readonly baseUrl: string) {}

  private http(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}${path}`;
  }

  private ws(path: string): string {
    return this.http(path).replace(/^http/, 'ws');
  }

  async createSession(config: SessionConfig): Promise<SessionInfo> {
    const response = await fetch(this.http('/sessions'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(config),
    });
    if (!response.ok) {
      throw new Error(`session rejected (${response.status}): ${await response.text()}`);
    }
    return (await response.json()) as SessionInfo;
  }

  async openStream(
    sessionId: string,
    onEvent: (event: PredictionEvent) => void,
    onClose?: (reason?: string) => void,
  ): Promise<StreamHandle> {
    const socket = new WebSocket(this.ws(`/sessions/${sessionId}/stream`));
    socket.binaryType = 'arraybuffer';
    socket.onmessage = (message) => {
      try {
        const payload = JSON.parse(message.data as string);
        // acks and errors for in-stream feedback share the socket; the view
        // posts feedback over HTTP, so only prediction events matter here
        if (typeof payload.frame_index === 'number' && payload.chosen !== undefined) {
          onEvent(payload as PredictionEvent);
        }
      } catch {
        // ignore non-JSON frames
      }
    };
    socket.onclose = (closed) => onClose?.(closed.reason);
    await new Promise<void>((resolve, reject) => {
      socket.onopen = () => resolve();
      socket.onerror = () => reject(new Error('stream connection failed'));
    });
    return {
      sendAudio: (chunk: ArrayBuffer) => socket.send(chunk),
      close: () => socket.close(),
    };
  }

  async postFeedback(sessionId: string, feedback: FeedbackMessage): Promise<FeedbackAck> {
    const response = await fetch(this.http(`/sessions/${sessionId}/feedback`), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(feedback),
    });
    if (!response.ok) {
      let detail = `feedback rejected (${response.status})`;
      try {
        detail = ((await response.json()) as { detail?: string }).detail ?? detail;
      } catch {
        // keep the generic message
      }
      throw new FeedbackError(detail, response.status);
    }
    return (await response.json()) as FeedbackAck;
  }

  async deleteSession(sessionId: string): Promise<void> {
    await fetch(this.http(`/sessions/${sessionId}`), { method: 'DELETE' });
  }
}
