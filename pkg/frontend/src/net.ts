/**
 * HTTP and WebSocket plumbing for one coordination server.
 *
 * Api wraps the REST endpoints; GameStream wraps the per-game socket and
 * reconnects with a capped backoff when the connection drops mid-play
 * (the server replays its latest snapshot on reconnect, so no state is
 * lost client-side).
 */

import {
  ErrorBody, GamePayload, LayoutInfo, PlanResponse, StreamFrame,
} from './protocol';

export class ApiError extends Error {
  constructor(public readonly status: number, public readonly body: ErrorBody) {
    super(body.message);
  }
}

async function parseError(response: Response): Promise<never> {
  let body: ErrorBody = { code: 'http', message: `HTTP ${response.status}` };
  try {
    const data = await response.json();
    if (data && typeof data === 'object' && 'error' in data) {
      body = (data as { error: ErrorBody }).error;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(response.status, body);
}

export class Api {
  constructor(public readonly baseUrl: string = '') {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { 'content-type': 'application/json' };
      init.body = JSON.stringify(body);
    }
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) await parseError(response);
    return response.json() as Promise<T>;
  }

  layouts(): Promise<{ layouts: LayoutInfo[] }> {
    return this.request('GET', '/api/layouts');
  }

  createGame(body: {
    layout: string; horizon?: number; seed?: number; free_play?: boolean;
  }): Promise<GamePayload> {
    return this.request('POST', '/api/games', body);
  }

  getGame(id: string): Promise<GamePayload> {
    return this.request('GET', `/api/games/${id}`);
  }

  sendInstruction(id: string, text: string): Promise<PlanResponse> {
    return this.request('POST', `/api/games/${id}/instruction`, { text });
  }

  sendFeedback(id: string, text: string): Promise<PlanResponse> {
    return this.request('POST', `/api/games/${id}/feedback`, { text });
  }

  accept(id: string): Promise<{ phase: string }> {
    return this.request('POST', `/api/games/${id}/accept`);
  }

  /** ws:// URL for a game's stream, derived from the HTTP base URL. */
  streamUrl(id: string): string {
    const base = this.baseUrl || (typeof location !== 'undefined' ? location.origin : '');
    return base.replace(/^http/, 'ws') + `/api/games/${id}/stream`;
  }
}

/** The subset of the WebSocket interface the stream needs (injectable in tests). */
export interface SocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

const RECONNECT_BASE_MS = 250;
const RECONNECT_CAP_MS = 4000;

export interface GameStreamHandlers {
  onFrame(frame: StreamFrame): void;
  onStatus?(status: 'connecting' | 'open' | 'closed'): void;
}

export class GameStream {
  private socket: SocketLike | null = null;
  private attempts = 0;
  private stopped = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly handlers: GameStreamHandlers,
    private readonly connect: SocketFactory,
  ) {}

  open(): void {
    this.stopped = false;
    this.dial();
  }

  private dial(): void {
    this.handlers.onStatus?.('connecting');
    const socket = this.connect(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
      this.handlers.onStatus?.('open');
    };
    socket.onmessage = (ev) => {
      let frame: StreamFrame;
      try {
        frame = JSON.parse(String(ev.data)) as StreamFrame;
      } catch {
        return;
      }
      this.handlers.onFrame(frame);
    };
    socket.onerror = () => { /* close always follows */ };
    socket.onclose = () => {
      this.socket = null;
      this.handlers.onStatus?.('closed');
      if (!this.stopped) this.scheduleRedial();
    };
  }

  private scheduleRedial(): void {
    const delay = Math.min(
      RECONNECT_CAP_MS, RECONNECT_BASE_MS * 2 ** this.attempts);
    this.attempts += 1;
    this.timer = setTimeout(() => this.dial(), delay);
  }

  send(action: string): void {
    this.socket?.send(JSON.stringify({ action }));
  }

  close(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.socket?.close();
    this.socket = null;
  }
}
