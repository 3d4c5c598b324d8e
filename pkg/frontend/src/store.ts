/**
 * Client-side view state, derived solely from server messages.
 *
 * The reducers are pure: feeding the same payloads in the same order
 * always produces the same view, and nothing here is ever written back
 * to the server. The server's game state is the only truth.
 */

import {
  ChatMessage, ConventionView, EpisodeResultView, ErrorBody, GamePayload,
  LayoutInfo, Phase, PlanResponse, Snapshot, StreamFrame, TranscriptView,
  isErrorFrame,
} from './protocol';

export interface ScorePoint {
  tick: number;
  score: number;
}

export interface GameView {
  gameId: string | null;
  layout: LayoutInfo | null;
  horizon: number;
  phase: Phase;
  freePlay: boolean;
  snapshot: Snapshot | null;
  convention: ConventionView | null;
  chat: ChatMessage[];
  transcripts: TranscriptView[];
  scoreSeries: ScorePoint[];
  result: EpisodeResultView | null;
  lastError: ErrorBody | null;
}

export function emptyView(): GameView {
  return {
    gameId: null,
    layout: null,
    horizon: 0,
    phase: 'planning',
    freePlay: false,
    snapshot: null,
    convention: null,
    chat: [],
    transcripts: [],
    scoreSeries: [],
    result: null,
    lastError: null,
  };
}

export function applyGame(view: GameView, game: GamePayload): GameView {
  const next: GameView = {
    ...view,
    gameId: game.id,
    layout: game.layout,
    horizon: game.config.horizon,
    phase: game.phase,
    freePlay: game.free_play,
    convention: game.convention,
    chat: [...game.chat],
    lastError: null,
  };
  return applySnapshot(next, game.snapshot);
}

export function applyPlan(view: GameView, instruction: string,
                          plan: PlanResponse): GameView {
  return {
    ...view,
    phase: plan.phase,
    convention: plan.convention,
    transcripts: [...plan.transcripts],
    chat: [
      ...view.chat,
      { role: 'human', text: instruction },
      { role: 'ai', text: plan.convention.text },
    ],
    lastError: null,
  };
}

export function applyError(view: GameView, error: ErrorBody): GameView {
  return { ...view, lastError: error };
}

export function applyFrame(view: GameView, frame: StreamFrame): GameView {
  if (isErrorFrame(frame)) return applyError(view, frame.error);
  return applySnapshot(view, frame);
}

function applySnapshot(view: GameView, snapshot: Snapshot): GameView {
  const series = trimmedSeries(view.scoreSeries, snapshot);
  return {
    ...view,
    phase: snapshot.phase,
    snapshot,
    scoreSeries: [...series, { tick: snapshot.tick, score: snapshot.score }],
    result: snapshot.result ?? view.result,
    lastError: null,
  };
}

/** Drop points at or past the incoming tick so reconnect replays stay clean. */
function trimmedSeries(series: ScorePoint[], snapshot: Snapshot): ScorePoint[] {
  const keep = series.filter((p) => p.tick < snapshot.tick);
  return keep;
}
