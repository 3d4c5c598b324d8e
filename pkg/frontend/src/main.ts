/**
 * App shell: a tiny hash router wiring the lobby, planning, and play
 * screens to one coordination server.
 *
 * The server is same-origin by default; `?server=http://host:port`
 * points the client elsewhere when the static files are hosted
 * separately from the service.
 */

import { Api, ApiError, GameStream } from './net';
import { KEY_ACTIONS, KeyWindow } from './keyboard';
import { GameView, applyFrame, applyGame, applyPlan, emptyView } from './store';
import { LobbyView } from './views/lobby';
import { PlanView } from './views/plan';
import { PlayView } from './views/play';

function serverBase(): string {
  const override = new URLSearchParams(location.search).get('server');
  return override !== null ? override.replace(/\/$/, '') : '';
}

export class App {
  private readonly api = new Api(serverBase());
  private readonly keys = new KeyWindow();
  private view: GameView = emptyView();
  private stream: GameStream | null = null;
  private playView: PlayView | null = null;
  private planView: PlanView | null = null;
  private playing = false;

  constructor(private readonly root: HTMLElement) {
    window.addEventListener('hashchange', () => this.route());
    window.addEventListener('keydown', (ev) => {
      if (!this.playing) return;
      if (this.keys.press(ev.key) || ev.key in KEY_ACTIONS) {
        ev.preventDefault();
      }
    });
    this.route();
  }

  private swap(element: HTMLElement): void {
    this.root.replaceChildren(element);
  }

  private leaveGame(): void {
    this.stream?.close();
    this.stream = null;
    this.playing = false;
    this.playView = null;
    this.planView = null;
  }

  private route(): void {
    this.leaveGame();
    const match = /^#\/game\/([^/]+)$/.exec(location.hash);
    if (match !== null) {
      void this.showGame(match[1]);
    } else {
      void this.showLobby();
    }
  }

  private async showLobby(): Promise<void> {
    const lobby = new LobbyView((layout) => void this.createGame(layout));
    this.swap(lobby.element);
    try {
      const { layouts } = await this.api.layouts();
      lobby.showLayouts(layouts);
    } catch (error) {
      lobby.showError(`The coordination server is not reachable (${error}).`);
    }
  }

  private async createGame(layout: string): Promise<void> {
    const game = await this.api.createGame({ layout });
    location.hash = `#/game/${game.id}`;
  }

  private async showGame(id: string): Promise<void> {
    try {
      const game = await this.api.getGame(id);
      this.view = applyGame(emptyView(), game);
    } catch (error) {
      const lobby = new LobbyView(() => undefined);
      this.swap(lobby.element);
      lobby.showError(`Game ${id} is not available (${error}).`);
      return;
    }
    if (this.view.phase === 'planning' || this.view.phase === 'reviewing') {
      this.showPlan(id);
    } else {
      this.showPlay(id);
    }
  }

  private showPlan(id: string): void {
    const plan = new PlanView({
      onInstruction: (text) => void this.sendPlanText(id, text, 'instruction'),
      onFeedback: (text) => void this.sendPlanText(id, text, 'feedback'),
      onAccept: () => void this.acceptPlan(id),
    });
    this.planView = plan;
    plan.update(this.view);
    this.swap(plan.element);
  }

  private async sendPlanText(id: string, text: string,
                             kind: 'instruction' | 'feedback'): Promise<void> {
    const plan = this.planView;
    if (plan === null) return;
    plan.setBusy(true);
    try {
      const response = kind === 'instruction'
        ? await this.api.sendInstruction(id, text)
        : await this.api.sendFeedback(id, text);
      this.view = applyPlan(this.view, text, response);
      plan.resetInput();
      plan.update(this.view);
    } catch (error) {
      if (error instanceof ApiError) {
        plan.showError(error.body);
      } else {
        plan.showError({ code: 'network', message: String(error) });
      }
    } finally {
      plan.setBusy(false);
    }
  }

  private async acceptPlan(id: string): Promise<void> {
    const plan = this.planView;
    try {
      await this.api.accept(id);
    } catch (error) {
      if (plan !== null && error instanceof ApiError) plan.showError(error.body);
      return;
    }
    const game = await this.api.getGame(id);
    this.view = applyGame(this.view, game);
    this.showPlay(id);
  }

  private showPlay(id: string): void {
    const play = new PlayView();
    this.playView = play;
    this.playing = true;
    play.update(this.view);
    this.swap(play.element);
    const stream = new GameStream(this.api.streamUrl(id), {
      onFrame: (frame) => {
        this.view = applyFrame(this.view, frame);
        play.update(this.view);
        if (this.view.phase === 'finished') {
          this.playing = false;
          this.stream?.close();
          this.stream = null;
        } else if (!('error' in frame)) {
          this.stream?.send(this.keys.take());
        }
      },
      onStatus: (status) => play.setStatus(status),
    }, (url) => new WebSocket(url));
    this.stream = stream;
    stream.open();
  }
}

const root = document.getElementById('app');
if (root !== null) new App(root);
