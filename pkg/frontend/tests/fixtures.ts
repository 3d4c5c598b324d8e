/**
 * Hand-built server payloads for the unit tests, shaped exactly like the
 * service's wire format.
 */

import {
  AgentProportions, ConventionView, GamePayload, LayoutInfo, Snapshot,
} from '../src/protocol';

export function layoutInfo(): LayoutInfo {
  return {
    name: 'solo_pot',
    grid: [
      'XXXXXXXXX',
      'X   D  OX',
      'X 1     X',
      'XS    P X',
      'X 2     X',
      'X    O  X',
      'XXXXXXXXX',
    ],
    width: 9,
    height: 7,
    pots: 1,
    ingredients: ['onion'],
  };
}

export function snapshot(over: Partial<Snapshot> = {}): Snapshot {
  return {
    type: 'snapshot',
    game_id: 'g1',
    phase: 'playing',
    tick: 0,
    remaining_ticks: 400,
    score: 0,
    players: [
      { id: 'ai', pos: [2, 2], facing: 'south', held: null },
      { id: 'human', pos: [4, 2], facing: 'south', held: null },
    ],
    pots: [{ pos: [3, 6], contents: [], cook_ticks_remaining: null }],
    counters: [],
    ...over,
  };
}

export function convention(): ConventionView {
  return {
    objective: 'onion',
    text: 'The work content and execution sequence of AI:\n(1) step',
    ai_steps: [
      { kind: 'fetch', pot: [3, 6], text: 'Fetch onions for pot (3,6)' },
      { kind: 'deliver', pot: [3, 6], text: 'Deliver onion soup for pot (3,6)' },
    ],
    human_steps: [],
  };
}

export function gamePayload(over: Partial<GamePayload> = {}): GamePayload {
  return {
    id: 'g1',
    layout: layoutInfo(),
    phase: 'planning',
    free_play: false,
    config: {
      horizon: 400, seed: 0, recipe_size: 3, cook_time: 20, score_per_soup: 20,
    },
    convention: null,
    chat: [],
    snapshot: snapshot({ phase: 'planning' }),
    ...over,
  };
}

export function proportions(over: Partial<AgentProportions> = {}): AgentProportions {
  return {
    shares: [
      { task: 'placement', pot: 1, fraction: 0.75 },
      { task: 'delivery', pot: 1, fraction: 0.25 },
    ],
    no_events: false,
    ...over,
  };
}
