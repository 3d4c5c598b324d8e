/**
 * Wire types for the coordination service.
 *
 * Every shape here mirrors a server payload field for field (snake_case
 * stays snake_case); the client never invents state of its own.
 */

export type Phase = 'planning' | 'reviewing' | 'playing' | 'finished';

export type ActionName =
  'up' | 'down' | 'left' | 'right' | 'stay' | 'interact';

export interface LayoutInfo {
  name: string;
  grid: string[];
  width: number;
  height: number;
  pots: number;
  ingredients: string[];
}

export interface HeldItem {
  kind: string;
  recipe?: string[];
  origin?: [number, number];
}

export interface PlayerState {
  id: 'ai' | 'human';
  pos: [number, number];
  facing: 'north' | 'south' | 'east' | 'west';
  held: HeldItem | null;
}

export interface PotView {
  pos: [number, number];
  contents: string[];
  cook_ticks_remaining: number | null;
}

export interface CounterItem {
  pos: [number, number];
  item: HeldItem;
}

export interface ProportionShare {
  task: string;
  pot: number;
  fraction: number;
}

export interface AgentProportions {
  shares: ProportionShare[];
  no_events: boolean;
}

export interface EpisodeResultView {
  score: number;
  discounted_return: number;
  ticks: number;
  seed: number;
  deliveries: number;
  event_proportions: Record<string, AgentProportions>;
}

export interface Snapshot {
  type: 'snapshot';
  game_id: string;
  phase: Phase;
  tick: number;
  remaining_ticks: number;
  score: number;
  players: PlayerState[];
  pots: PotView[];
  counters: CounterItem[];
  result?: EpisodeResultView;
}

export interface ConventionStep {
  kind: string;
  pot: [number, number];
  text: string;
}

export interface ConventionView {
  objective: string;
  text: string;
  ai_steps: ConventionStep[];
  human_steps: ConventionStep[];
}

export interface ChatMessage {
  role: 'human' | 'ai';
  text: string;
}

export interface TranscriptView {
  session_index: number;
  stage: number;
  prompt: string;
  response: string;
  parsed_ok: boolean;
  item_index: number | null;
  agent: string | null;
}

export interface GamePayload {
  id: string;
  layout: LayoutInfo;
  phase: Phase;
  free_play: boolean;
  config: {
    horizon: number;
    seed: number;
    recipe_size: number;
    cook_time: number;
    score_per_soup: number;
  };
  convention: ConventionView | null;
  chat: ChatMessage[];
  snapshot: Snapshot;
}

export interface PlanResponse {
  phase: Phase;
  convention: ConventionView;
  transcripts: TranscriptView[];
}

export interface ErrorBody {
  code: string;
  message: string;
  stage?: number;
}

export interface ErrorFrame {
  error: ErrorBody;
}

export type StreamFrame = Snapshot | ErrorFrame;

export function isErrorFrame(frame: StreamFrame): frame is ErrorFrame {
  return 'error' in frame;
}
