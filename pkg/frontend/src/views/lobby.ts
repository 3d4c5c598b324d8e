/**
 * Lobby: the bundled kitchens as cards, each with a create button.
 */

import { clear, el } from '../dom';
import { LayoutInfo } from '../protocol';

export class LobbyView {
  readonly element: HTMLElement;
  private readonly banner: HTMLElement;
  private readonly cards: HTMLElement;

  constructor(private readonly onCreate: (layout: string) => void) {
    this.banner = el('div', { class: 'banner error hidden' });
    this.cards = el('div', { class: 'layout-cards' });
    this.element = el('section', { class: 'lobby' },
      el('h1', {}, 'Pick a kitchen'),
      this.banner,
      this.cards);
  }

  showError(message: string): void {
    this.banner.textContent = message;
    this.banner.classList.remove('hidden');
  }

  showLayouts(layouts: LayoutInfo[]): void {
    this.banner.classList.add('hidden');
    clear(this.cards);
    for (const layout of layouts) {
      const button = el('button', { class: 'create', 'data-layout': layout.name },
        'Start');
      button.addEventListener('click', () => this.onCreate(layout.name));
      this.cards.append(el('article', { class: 'layout-card' },
        el('h2', {}, layout.name),
        el('p', { class: 'meta' },
          `${layout.width}×${layout.height}, ${layout.pots} pot` +
          `${layout.pots === 1 ? '' : 's'}, ${layout.ingredients.join(' + ')}`),
        el('pre', { class: 'grid-preview' }, layout.grid.join('\n')),
        button));
    }
  }
}
