// Demo page wiring: connect to a local service, stream a WAV file or the mic.

import { parseWav, startMicCapture, streamPcm } from './audio.js';
import { LiveView } from './app.js';
import { HttpTransport } from './transport.js';

export function mountDemo(root: HTMLElement, serviceUrl = 'http://127.0.0.1:8765'): LiveView {
  const view = new LiveView(root.querySelector('[data-role="view"]') as HTMLElement,
                            new HttpTransport(serviceUrl));
  let stopSource: (() => void) | null = null;

  const connectButton = root.querySelector<HTMLButtonElement>('[data-role="connect"]');
  connectButton?.addEventListener('click', () => {
    const agent = root.querySelector<HTMLSelectElement>('[data-role="agent"]')?.value ?? 'berlinucb';
    void view.connect({ agent, mode: 'interactive' });
  });

  const fileInput = root.querySelector<HTMLInputElement>('[data-role="wav-file"]');
  fileInput?.addEventListener('change', async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    const wav = parseWav(await file.arrayBuffer());
    stopSource?.();
    stopSource = streamPcm(wav.pcm, (chunk) => view.pushAudio(chunk));
  });

  const micButton = root.querySelector<HTMLButtonElement>('[data-role="mic"]');
  micButton?.addEventListener('click', async () => {
    stopSource?.();
    stopSource = await startMicCapture((chunk) => view.pushAudio(chunk));
  });

  return view;
}

if (typeof document !== 'undefined' && document.getElementById('minivox-demo')) {
  mountDemo(document.getElementById('minivox-demo') as HTMLElement);
}
