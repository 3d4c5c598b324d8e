/**
 * Keyboard-to-tick mapping: the latest mapped key pressed inside a tick
 * window wins; silence maps to "stay". Arrow keys steer, space interacts.
 */

import { ActionName } from './protocol';

export const KEY_ACTIONS: Record<string, ActionName> = {
  ArrowUp: 'up',
  ArrowDown: 'down',
  ArrowLeft: 'left',
  ArrowRight: 'right',
  ' ': 'interact',
  Space: 'interact',
};

export class KeyWindow {
  private pending: ActionName | null = null;

  /** Record a keypress; returns true when the key maps to an action. */
  press(key: string): boolean {
    const action = KEY_ACTIONS[key];
    if (action === undefined) return false;
    this.pending = action;
    return true;
  }

  /** The action for the closing tick window; clears the window. */
  take(): ActionName {
    const action = this.pending ?? 'stay';
    this.pending = null;
    return action;
  }
}
