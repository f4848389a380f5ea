// PCM16 plumbing: WAV parsing, float conversion, paced streaming, mic capture.

export const SAMPLE_RATE = 16000;

export function floatToPcm16(samples: Float32Array): ArrayBuffer {
  const out = new Int16Array(samples.length);
  for (let i = 0; i < samples.length; i++) {
    const v = Math.max(-1, Math.min(1, samples[i] ?? 0));
    out[i] = Math.round(v * 32767);
  }
  return out.buffer;
}

export interface WavPayload {
  sampleRate: number;
  pcm: ArrayBuffer; // raw little-endian int16 mono payload
}

/** Parse a RIFF/PCM16/mono WAV; throws on any other encoding. */
export function parseWav(bytes: ArrayBuffer): WavPayload {
  const view = new DataView(bytes);
  const tag = (offset: number) =>
    String.fromCharCode(view.getUint8(offset), view.getUint8(offset + 1),
                        view.getUint8(offset + 2), view.getUint8(offset + 3));
  if (tag(0) !== 'RIFF' || tag(8) !== 'WAVE') {
    throw new Error('not a RIFF/WAVE file');
  }
  let offset = 12;
  let sampleRate = 0;
  while (offset + 8 <= view.byteLength) {
    const chunkId = tag(offset);
    const size = view.getUint32(offset + 4, true);
    if (chunkId === 'fmt ') {
      const format = view.getUint16(offset + 8, true);
      const channels = view.getUint16(offset + 10, true);
      sampleRate = view.getUint32(offset + 12, true);
      const bits = view.getUint16(offset + 22, true);
      if (format !== 1 || channels !== 1 || bits !== 16) {
        throw new Error(`need PCM16 mono, got format=${format} channels=${channels} bits=${bits}`);
      }
    } else if (chunkId === 'data') {
      if (sampleRate === 0) throw new Error('data chunk before fmt chunk');
      return { sampleRate, pcm: bytes.slice(offset + 8, offset + 8 + size) };
    }
    offset += 8 + size + (size % 2);
  }
  throw new Error('no data chunk found');
}

/**
 * Push a PCM16 payload in hop-sized bites, paced to real time by default.
 * Returns a cancel function.
 */
export function streamPcm(
  pcm: ArrayBuffer,
  send: (chunk: ArrayBuffer) => void,
  opts: { chunkMs?: number; realtime?: boolean } = {},
): () => void {
  const chunkMs = opts.chunkMs ?? 100;
  const bytesPerChunk = ((SAMPLE_RATE * chunkMs) / 1000) * 2;
  let position = 0;
  let timer: ReturnType<typeof setInterval> | null = null;
  const pushOne = () => {
    if (position >= pcm.byteLength) {
      if (timer !== null) clearInterval(timer);
      return;
    }
    send(pcm.slice(position, position + bytesPerChunk));
    position += bytesPerChunk;
  };
  if (opts.realtime === false) {
    while (position < pcm.byteLength) pushOne();
    return () => undefined;
  }
  timer = setInterval(pushOne, chunkMs);
  pushOne();
  return () => {
    if (timer !== null) clearInterval(timer);
  };
}

/**
 * Capture the microphone at 16 kHz and hand PCM16 chunks to `send`.
 * Returns an async stop function. Requires a browser with getUserMedia.
 */
export async function startMicCapture(send: (chunk: ArrayBuffer) => void): Promise<() => void> {
  if (!navigator.mediaDevices?.getUserMedia) {
    throw new Error('microphone capture is not available in this browser');
  }
  const media = await navigator.mediaDevices.getUserMedia({ audio: true });
  const context = new AudioContext({ sampleRate: SAMPLE_RATE });
  const source = context.createMediaStreamSource(media);
  const processor = context.createScriptProcessor(4096, 1, 1);
  processor.onaudioprocess = (event) => {
    send(floatToPcm16(event.inputBuffer.getChannelData(0)));
  };
  source.connect(processor);
  processor.connect(context.destination);
  return () => {
    processor.disconnect();
    source.disconnect();
    media.getTracks().forEach((track) => track.stop());
    void context.close();
  };
}
