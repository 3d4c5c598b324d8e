// @vitest-environment jsdom
import { describe, expect, it, vi } from 'vitest';

import { LobbyView } from '../src/views/lobby';
import { PlanView } from '../src/views/plan';
import { PlayView } from '../src/views/play';
import { applyFrame, applyGame, applyPlan, emptyView } from '../src/store';
import {
  convention, gamePayload, layoutInfo, proportions, snapshot,
} from './fixtures';

describe('LobbyView', () => {
  it('renders a card per kitchen and wires the start buttons', () => {
    const created: string[] = [];
    const lobby = new LobbyView((name) => created.push(name));
    lobby.showLayouts([layoutInfo(), { ...layoutInfo(), name: 'triple_pot' }]);
    const cards = lobby.element.querySelectorAll('.layout-card');
    expect(cards).toHaveLength(2);
    expect(cards[0].querySelector('h2')?.textContent).toBe('solo_pot');
    (cards[1].querySelector('button.create') as HTMLButtonElement).click();
    expect(created).toEqual(['triple_pot']);
  });

  it('shows a banner when the server is unreachable', () => {
    const lobby = new LobbyView(() => undefined);
    lobby.showError('The coordination server is not reachable.');
    const banner = lobby.element.querySelector('.banner');
    expect(banner?.classList.contains('hidden')).toBe(false);
    expect(banner?.textContent).toContain('not reachable');
  });
});

function planHarness() {
  const calls = { instruction: [] as string[], feedback: [] as string[], accepts: 0 };
  const view = new PlanView({
    onInstruction: (text) => calls.instruction.push(text),
    onFeedback: (text) => calls.feedback.push(text),
    onAccept: () => { calls.accepts += 1; },
  });
  return { view, calls };
}

describe('PlanView', () => {
  it('disables accept until a convention exists', () => {
    const { view } = planHarness();
    const state = applyGame(emptyView(), gamePayload());
    view.update(state);
    const accept = view.element.querySelector('.accept') as HTMLButtonElement;
    expect(accept.disabled).toBe(true);
    view.update(applyPlan(state, 'go', {
      phase: 'reviewing', convention: convention(), transcripts: [],
    }));
    expect(accept.disabled).toBe(false);
  });

  it('lays the proposal out as AI column then Human column', () => {
    const { view } = planHarness();
    const state = applyPlan(applyGame(emptyView(), gamePayload()), 'go', {
      phase: 'reviewing', convention: convention(), transcripts: [],
    });
    view.update(state);
    const columns = view.element.querySelectorAll('.plan-column');
    expect(columns).toHaveLength(2);
    expect(columns[0].classList.contains('ai')).toBe(true);
    expect(columns[1].classList.contains('human')).toBe(true);
    expect(columns[0].querySelectorAll('li')).toHaveLength(2);
    expect(columns[1].textContent).toContain('None');
  });

  it('sends the typed text through the right handler', () => {
    const { view, calls } = planHarness();
    view.update(applyGame(emptyView(), gamePayload()));
    const input = view.element.querySelector('.chat-input') as HTMLTextAreaElement;
    input.value = '  make onion soup  ';
    (view.element.querySelector('.send-instruction') as HTMLButtonElement).click();
    expect(calls.instruction).toEqual(['make onion soup']);
    input.value = 'only fetch';
    (view.element.querySelector('.send-feedback') as HTMLButtonElement).click();
    expect(calls.feedback).toEqual(['only fetch']);
  });

  it('shows the failing stage when planning breaks', () => {
    const { view } = planHarness();
    view.showError({ code: 'stage_failed', message: 'no parse', stage: 4 });
    const banner = view.element.querySelector('.banner');
    expect(banner?.textContent).toBe('planning stage 4 failed: no parse');
  });

  it('renders one transcript entry per planning session', () => {
    const { view } = planHarness();
    const state = applyPlan(applyGame(emptyView(), gamePayload()), 'go', {
      phase: 'reviewing',
      convention: convention(),
      transcripts: [
        { session_index: 1, stage: 1, prompt: 'p1', response: 'r1',
          parsed_ok: true, item_index: null, agent: null },
        { session_index: 2, stage: 2, prompt: 'p2', response: 'r2',
          parsed_ok: false, item_index: null, agent: null },
      ],
    });
    view.update(state);
    const entries = view.element.querySelectorAll('.transcript');
    expect(entries).toHaveLength(2);
    expect(entries[1].querySelector('summary')?.textContent)
      .toContain('parse failed');
  });
});

describe('PlayView', () => {
  it('keeps the HUD in step with the snapshot', () => {
    const play = new PlayView();
    vi.spyOn(console, 'error').mockImplementation(() => undefined);
    let state = applyGame(emptyView(), gamePayload({ phase: 'playing' }));
    state = applyFrame(state, snapshot({ tick: 5, score: 20, remaining_ticks: 395 }));
    play.update(state);
    expect(play.element.querySelector('.hud-score')?.textContent).toBe('Score 20');
    expect(play.element.querySelector('.hud-countdown')?.textContent)
      .toBe('395 ticks left');
    expect(play.element.querySelector('.final-screen')?.classList
      .contains('hidden')).toBe(true);
  });

  it('shows the final screen with per-agent pies once finished', () => {
    const play = new PlayView();
    vi.spyOn(console, 'error').mockImplementation(() => undefined);
    let state = applyGame(emptyView(), gamePayload({ phase: 'playing' }));
    state = applyFrame(state, snapshot({
      tick: 400, phase: 'finished', score: 40,
      result: {
        score: 40, discounted_return: 40, ticks: 400, seed: 0, deliveries: 2,
        event_proportions: { ai: proportions(), human: proportions() },
      },
    }));
    play.update(state);
    const final = play.element.querySelector('.final-screen');
    expect(final?.classList.contains('hidden')).toBe(false);
    expect(final?.querySelector('.final-score')?.textContent)
      .toBe('Final score 40 (2 soups in 400 ticks)');
    const pies = final?.querySelectorAll('canvas.pie') ?? [];
    expect(pies).toHaveLength(2);
    for (const pie of pies) {
      const sum = Number(pie.getAttribute('data-fraction-sum'));
      expect(Math.abs(sum - 1)).toBeLessThanOrEqual(1e-9);
    }
  });

  it('says so when an agent logged no events', () => {
    const play = new PlayView();
    vi.spyOn(console, 'error').mockImplementation(() => undefined);
    let state = applyGame(emptyView(), gamePayload({ phase: 'playing' }));
    state = applyFrame(state, snapshot({
      tick: 400, phase: 'finished',
      result: {
        score: 0, discounted_return: 0, ticks: 400, seed: 0, deliveries: 0,
        event_proportions: {
          ai: proportions(),
          human: { shares: [], no_events: true },
        },
      },
    }));
    play.update(state);
    const humanPie = play.element.querySelector('.agent-pie.human');
    expect(humanPie?.textContent).toContain('No events');
  });
});
