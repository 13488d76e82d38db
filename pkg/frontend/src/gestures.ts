/**
 * Gesture-to-command mapping.
 *
 * Every pointer gesture on the panel resolves to exactly one command draft
 * (op + args); the store assigns expected_revision when it dispatches. The
 * server owns all semantics — these helpers only choose which command a
 * gesture means and give immediate visual feedback (imaginative snapping),
 * never apply rules of their own.
 */

import type { CommandDraft, InstanceDoc, ImaginationLevel, NormRect, Point } from './types.js';

/** Preset imaginative areas; snapping ties go to the smaller level. */
export const IMAGINATIVE_AREAS: Record<ImaginationLevel, number> = {
  small: 0.004,
  medium: 0.01,
  large: 0.02,
};

/** The snap level a dragged rect of this area will land on server-side. */
export function snapLevelForArea(area: number): ImaginationLevel {
  let best: ImaginationLevel = 'small';
  let bestKey = [Math.abs(IMAGINATIVE_AREAS.small - area), IMAGINATIVE_AREAS.small];
  for (const level of ['medium', 'large'] as const) {
    const preset = IMAGINATIVE_AREAS[level];
    const key = [Math.abs(preset - area), preset];
    if (key[0]! < bestKey[0]! || (key[0] === bestKey[0] && key[1]! < bestKey[1]!)) {
      best = level;
      bestKey = key;
    }
  }
  return best;
}

/** Dragging a mood-board source token onto the panel places a copy. */
export function dropSourceToken(tokenId: string, rect: NormRect): CommandDraft {
  return { op: 'place_copy', args: { source: tokenId, rect: { ...rect } } };
}

/** Dragging a placed instance moves it; size is preserved server-side. */
export function dragInstance(instance: InstanceDoc, to: Point): CommandDraft {
  return {
    op: 'set_geometry',
    args: { instance: instance.instance_id, pos: { x: to.x, y: to.y } },
  };
}

/**
 * Dragging a resize handle. Textual tokens have no handles, so a textual
 * drag maps to no command at all; imaginative rects are sent as dragged and
 * snap to a preset level on the server.
 */
export function dragHandle(instance: InstanceDoc, rect: NormRect): CommandDraft | null {
  if (instance.kind === 'textual') {
    return null;
  }
  return {
    op: 'set_geometry',
    args: { instance: instance.instance_id, rect: { ...rect } },
  };
}

/** Multi-select plus the Group action. */
export function groupSelection(instanceIds: string[]): CommandDraft {
  return { op: 'group', args: { instances: [...instanceIds] } };
}

export function ungroup(groupId: string): CommandDraft {
  return { op: 'ungroup', args: { group: groupId } };
}

/** Dropping a modifier (or a group) onto a subject links it. */
export function dropModifierOnSubject(modifierId: string, subjectId: string): CommandDraft {
  return { op: 'link', args: { modifier: modifierId, target: subjectId } };
}

export function unlink(linkId: string): CommandDraft {
  return { op: 'unlink', args: { link: linkId } };
}

/** Committing the name field renames an instance. */
export function rename(instanceId: string, name: string): CommandDraft {
  return { op: 'set_name', args: { instance: instanceId, name } };
}

export function createTextual(text: string, pos: Point): CommandDraft {
  return { op: 'create_textual', args: { text, pos: { x: pos.x, y: pos.y } } };
}

export function createImaginative(level: ImaginationLevel, pos: Point): CommandDraft {
  return { op: 'create_imaginative', args: { level, pos: { x: pos.x, y: pos.y } } };
}

export function clearPanel(): CommandDraft {
  return { op: 'clear_panel', args: {} };
}

/**
 * `#` autocompletion for the textual editor: candidate names for the
 * partial reference under the caret, or null when the caret is not inside
 * a `#reference`.
 */
export function autocompleteRefs(
  text: string,
  caret: number,
  names: Record<string, string>,
): { start: number; prefix: string; candidates: string[] } | null {
  const head = text.slice(0, caret);
  const match = /#([A-Za-z0-9_]*)$/.exec(head);
  if (!match) {
    return null;
  }
  const prefix = match[1] ?? '';
  const candidates = Object.keys(names)
    .filter((name) => name.startsWith(prefix))
    .sort();
  return { start: caret - prefix.length, prefix, candidates };
}
