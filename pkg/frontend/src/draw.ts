/**
 * Pure scene builders for the kitchen canvas and the summary pies.
 *
 * Everything here turns server payloads into plain draw-op lists; the
 * canvas executor just replays them. Identical snapshots therefore
 * always produce identical frames, which the tests check by deep
 * equality rather than by reading pixels.
 */

import { AgentProportions, PlayerState, Snapshot } from './protocol';

export type DrawOp =
  | { kind: 'rect'; x: number; y: number; w: number; h: number; fill: string }
  | { kind: 'disc'; x: number; y: number; r: number; fill: string }
  | { kind: 'glyph'; x: number; y: number; text: string; fill: string };

const TILE_FILLS: Record<string, string> = {
  ' ': '#2b2b33',
  X: '#4a4a55',
  O: '#b8860b',
  T: '#a03030',
  D: '#8a8aa0',
  P: '#1f1f26',
  S: '#2e7d4f',
};

const TILE_GLYPHS: Record<string, string> = {
  O: 'O',
  T: 'T',
  D: 'D',
  P: 'P',
  S: 'S',
};

const ITEM_FILLS: Record<string, string> = {
  onion: '#e8c04a',
  tomato: '#e05545',
  dish: '#e8e8f0',
  soup: '#f0a050',
};

const PLAYER_FILLS: Record<string, string> = {
  ai: '#4f9de8',
  human: '#e8744f',
};

const FACING_OFFSETS: Record<string, [number, number]> = {
  north: [0, -0.3],
  south: [0, 0.3],
  west: [-0.3, 0],
  east: [0.3, 0],
};

/** Static board layer: one rect per tile plus a letter for fixtures. */
export function boardDrawOps(grid: string[]): DrawOp[] {
  const ops: DrawOp[] = [];
  grid.forEach((row, r) => {
    [...row].forEach((glyph, c) => {
      const key = glyph === '1' || glyph === '2' ? ' ' : glyph;
      ops.push({
        kind: 'rect', x: c, y: r, w: 1, h: 1,
        fill: TILE_FILLS[key] ?? TILE_FILLS[' '],
      });
      const letter = TILE_GLYPHS[key];
      if (letter !== undefined) {
        ops.push({ kind: 'glyph', x: c + 0.5, y: r + 0.5, text: letter,
                   fill: '#c8c8d4' });
      }
    });
  });
  return ops;
}

function heldFill(kind: string): string {
  return ITEM_FILLS[kind] ?? '#ffffff';
}

function playerOps(player: PlayerState): DrawOp[] {
  const [r, c] = player.pos;
  const cx = c + 0.5;
  const cy = r + 0.5;
  const ops: DrawOp[] = [
    { kind: 'disc', x: cx, y: cy, r: 0.38, fill: PLAYER_FILLS[player.id] },
  ];
  const [dx, dy] = FACING_OFFSETS[player.facing] ?? [0, 0];
  ops.push({ kind: 'disc', x: cx + dx, y: cy + dy, r: 0.1, fill: '#15151a' });
  if (player.held !== null) {
    ops.push({ kind: 'disc', x: cx, y: cy - 0.42, r: 0.14,
               fill: heldFill(player.held.kind) });
  }
  return ops;
}

/** Dynamic layer: pot contents and timers, counter items, both chefs. */
export function liveDrawOps(snapshot: Snapshot): DrawOp[] {
  const ops: DrawOp[] = [];
  for (const pot of snapshot.pots) {
    const [r, c] = pot.pos;
    pot.contents.forEach((ingredient, i) => {
      ops.push({ kind: 'disc', x: c + 0.25 + 0.25 * i, y: r + 0.3, r: 0.11,
                 fill: heldFill(ingredient) });
    });
    if (pot.cook_ticks_remaining !== null) {
      ops.push({ kind: 'glyph', x: c + 0.5, y: r + 0.72,
                 text: String(pot.cook_ticks_remaining), fill: '#f0d060' });
    }
  }
  for (const counter of snapshot.counters) {
    const [r, c] = counter.pos;
    ops.push({ kind: 'disc', x: c + 0.5, y: r + 0.5, r: 0.16,
               fill: heldFill(counter.item.kind) });
  }
  for (const player of snapshot.players) {
    ops.push(...playerOps(player));
  }
  return ops;
}

export interface PieSlice {
  label: string;
  fraction: number;
  start: number;
  end: number;
  color: string;
}

const PIE_COLORS = [
  '#4f9de8', '#e8744f', '#58b368', '#c785d6', '#e8c04a', '#6ad0c8',
  '#d66a8c', '#9aa45e',
];

/**
 * Pie slices for one agent's event shares; angles start at 12 o'clock.
 * Fractions come straight from the server and sum to 1 whenever the
 * agent logged any event at all.
 */
export function pieSlices(props: AgentProportions): PieSlice[] {
  if (props.no_events) return [];
  const slices: PieSlice[] = [];
  let angle = -Math.PI / 2;
  props.shares.forEach((share, i) => {
    const sweep = share.fraction * 2 * Math.PI;
    slices.push({
      label: `${share.task} (pot ${share.pot})`,
      fraction: share.fraction,
      start: angle,
      end: angle + sweep,
      color: PIE_COLORS[i % PIE_COLORS.length],
    });
    angle += sweep;
  });
  return slices;
}
