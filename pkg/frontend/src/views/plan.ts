/**
 * Planning screen: chat on the left, the proposed convention on the
 * right as two columns (AI first, then Human), with Accept / Revise
 * controls and a transcript drawer for each planning session.
 */

import { clear, el } from '../dom';
import { ConventionStep, ErrorBody } from '../protocol';
import { GameView } from '../store';

export interface PlanHandlers {
  onInstruction(text: string): void;
  onFeedback(text: string): void;
  onAccept(): void;
}

function stepsColumn(title: string, steps: ConventionStep[]): HTMLElement {
  const list = el('ol', { class: 'steps' });
  for (const step of steps) {
    list.append(el('li', { 'data-kind': step.kind }, step.text));
  }
  const column = el('div', { class: `plan-column ${title.toLowerCase()}` },
    el('h3', {}, title));
  column.append(steps.length > 0 ? list : el('p', { class: 'none' }, 'None'));
  return column;
}

export class PlanView {
  readonly element: HTMLElement;
  private readonly banner: HTMLElement;
  private readonly chatLog: HTMLElement;
  private readonly input: HTMLTextAreaElement;
  private readonly instructionButton: HTMLButtonElement;
  private readonly feedbackButton: HTMLButtonElement;
  private readonly acceptButton: HTMLButtonElement;
  private readonly panel: HTMLElement;
  private readonly drawer: HTMLElement;

  constructor(handlers: PlanHandlers) {
    this.banner = el('div', { class: 'banner error hidden' });
    this.chatLog = el('div', { class: 'chat-log' });
    this.input = el('textarea', {
      class: 'chat-input',
      placeholder: 'Tell your partner how to split the work…',
    });
    this.instructionButton = el('button', { class: 'send-instruction' },
      'Send instruction');
    this.feedbackButton = el('button', { class: 'send-feedback' },
      'Send feedback');
    this.acceptButton = el('button', { class: 'accept', disabled: '' },
      'Accept and play');
    this.panel = el('div', { class: 'plan-panel' });
    this.drawer = el('div', { class: 'transcripts' });

    this.instructionButton.addEventListener('click', () => {
      const text = this.input.value.trim();
      if (text) handlers.onInstruction(text);
    });
    this.feedbackButton.addEventListener('click', () => {
      const text = this.input.value.trim();
      if (text) handlers.onFeedback(text);
    });
    this.acceptButton.addEventListener('click', () => handlers.onAccept());

    this.element = el('section', { class: 'plan' },
      this.banner,
      el('div', { class: 'plan-grid' },
        el('div', { class: 'chat' },
          el('h2', {}, 'Chat'),
          this.chatLog,
          this.input,
          el('div', { class: 'chat-buttons' },
            this.instructionButton, this.feedbackButton)),
        el('div', { class: 'proposal' },
          el('h2', {}, 'Proposed convention'),
          this.panel,
          this.acceptButton,
          el('details', {},
            el('summary', {}, 'Planning transcripts'),
            this.drawer))));
  }

  /** Clear the box after a message went through. */
  resetInput(): void {
    this.input.value = '';
  }

  setBusy(busy: boolean): void {
    this.instructionButton.disabled = busy;
    this.feedbackButton.disabled = busy;
  }

  showError(error: ErrorBody): void {
    const stage = error.stage !== undefined
      ? `planning stage ${error.stage} failed: ` : '';
    this.banner.textContent = stage + error.message;
    this.banner.classList.remove('hidden');
  }

  update(view: GameView): void {
    if (view.lastError !== null) {
      this.showError(view.lastError);
    } else {
      this.banner.classList.add('hidden');
    }

    clear(this.chatLog);
    for (const message of view.chat) {
      this.chatLog.append(el('div', { class: `chat-message ${message.role}` },
        el('span', { class: 'who' }, message.role === 'human' ? 'You' : 'AI'),
        el('pre', {}, message.text)));
    }

    clear(this.panel);
    if (view.convention === null) {
      this.panel.append(el('p', { class: 'placeholder' },
        'Send an instruction to get a proposed split of the work.'));
    } else {
      this.panel.append(
        stepsColumn('AI', view.convention.ai_steps),
        stepsColumn('Human', view.convention.human_steps));
    }
    this.acceptButton.disabled =
      view.convention === null && !view.freePlay;

    clear(this.drawer);
    for (const transcript of view.transcripts) {
      this.drawer.append(el('details', { class: 'transcript' },
        el('summary', {},
          `Session ${transcript.session_index}` +
          (transcript.parsed_ok ? '' : ' (parse failed)')),
        el('h4', {}, 'Prompt'),
        el('pre', {}, transcript.prompt),
        el('h4', {}, 'Response'),
        el('pre', {}, transcript.response)));
    }
  }
}
