/**
 * Live play screen: the kitchen canvas, a score and countdown HUD, and,
 * once the episode finishes, the result panel with one event-share pie
 * per chef.
 */

import { DrawOp, boardDrawOps, liveDrawOps, pieSlices } from '../draw';
import { clear, el } from '../dom';
import { AgentProportions } from '../protocol';
import { GameView } from '../store';

const CELL = 48;
const PIE_SIZE = 140;

/** 2D context, or null where canvas is not implemented (headless tests). */
function context2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D | null {
  try {
    return canvas.getContext('2d');
  } catch {
    return null;
  }
}

function paintOps(ctx: CanvasRenderingContext2D | null, ops: DrawOp[],
                  cell: number): void {
  if (ctx === null) return;
  for (const op of ops) {
    switch (op.kind) {
      case 'rect':
        ctx.fillStyle = op.fill;
        ctx.fillRect(op.x * cell, op.y * cell, op.w * cell, op.h * cell);
        break;
      case 'disc':
        ctx.fillStyle = op.fill;
        ctx.beginPath();
        ctx.arc(op.x * cell, op.y * cell, op.r * cell, 0, 2 * Math.PI);
        ctx.fill();
        break;
      case 'glyph':
        ctx.fillStyle = op.fill;
        ctx.font = `${Math.floor(cell * 0.4)}px monospace`;
        ctx.textAlign = 'center';
        ctx.textBaseline = 'middle';
        ctx.fillText(op.text, op.x * cell, op.y * cell);
        break;
    }
  }
}

function paintPie(canvas: HTMLCanvasElement, props: AgentProportions): void {
  const ctx = context2d(canvas);
  if (ctx === null) return;
  const cx = canvas.width / 2;
  const cy = canvas.height / 2;
  const radius = Math.min(cx, cy) - 4;
  for (const slice of pieSlices(props)) {
    ctx.fillStyle = slice.color;
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.arc(cx, cy, radius, slice.start, slice.end);
    ctx.closePath();
    ctx.fill();
  }
}

function pieFigure(agent: string, props: AgentProportions): HTMLElement {
  const slices = pieSlices(props);
  const sum = slices.reduce((acc, slice) => acc + slice.fraction, 0);
  const canvas = el('canvas', {
    width: String(PIE_SIZE), height: String(PIE_SIZE),
    class: `pie pie-${agent}`, 'data-fraction-sum': String(sum),
  });
  paintPie(canvas, props);
  const legend = el('ul', { class: 'pie-legend' });
  for (const slice of slices) {
    const swatch = el('span', { class: 'swatch' });
    swatch.style.background = slice.color;
    legend.append(el('li', {}, swatch,
      `${slice.label}: ${(slice.fraction * 100).toFixed(1)}%`));
  }
  const figure = el('figure', { class: `agent-pie ${agent}` },
    el('figcaption', {}, agent === 'ai' ? 'AI events' : 'Your events'));
  figure.append(props.no_events
    ? el('p', { class: 'none' }, 'No events')
    : el('div', {}, canvas, legend));
  return figure;
}

export class PlayView {
  readonly element: HTMLElement;
  private readonly scoreBox: HTMLElement;
  private readonly countdown: HTMLElement;
  private readonly status: HTMLElement;
  private readonly canvas: HTMLCanvasElement;
  private readonly finished: HTMLElement;
  private boardFor: string | null = null;
  private boardOps: DrawOp[] = [];

  constructor() {
    this.scoreBox = el('div', { class: 'hud-score' }, 'Score 0');
    this.countdown = el('div', { class: 'hud-countdown' });
    this.status = el('div', { class: 'hud-status' });
    this.canvas = el('canvas', { class: 'kitchen' });
    this.finished = el('div', { class: 'final-screen hidden' });
    this.element = el('section', { class: 'play' },
      el('div', { class: 'hud' },
        this.scoreBox, this.countdown, this.status),
      this.canvas,
      this.finished,
      el('p', { class: 'help' },
        'Arrow keys move your chef; space picks up, puts down, and serves.'));
  }

  setStatus(status: string): void {
    this.status.textContent = status === 'open' ? '' : status;
  }

  update(view: GameView): void {
    const snapshot = view.snapshot;
    if (view.layout === null || snapshot === null) return;

    this.scoreBox.textContent = `Score ${snapshot.score}`;
    this.countdown.textContent = `${snapshot.remaining_ticks} ticks left`;

    if (this.boardFor !== view.layout.name) {
      this.boardFor = view.layout.name;
      this.boardOps = boardDrawOps(view.layout.grid);
      this.canvas.width = view.layout.width * CELL;
      this.canvas.height = view.layout.height * CELL;
    }
    const ctx = context2d(this.canvas);
    paintOps(ctx, this.boardOps, CELL);
    paintOps(ctx, liveDrawOps(snapshot), CELL);

    if (view.phase === 'finished' && view.result !== null) {
      const result = view.result;
      clear(this.finished);
      this.finished.classList.remove('hidden');
      this.finished.append(
        el('h2', {}, 'Episode finished'),
        el('p', { class: 'final-score' },
          `Final score ${result.score} ` +
          `(${result.deliveries} soup${result.deliveries === 1 ? '' : 's'} ` +
          `in ${result.ticks} ticks)`),
        el('div', { class: 'pies' },
          pieFigure('ai', result.event_proportions['ai']),
          pieFigure('human', result.event_proportions['human'])));
    } else {
      this.finished.classList.add('hidden');
    }
  }
}
