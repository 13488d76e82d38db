/**
 * Resize-handle exposure per token kind.
 *
 * Subjects, colors, and styles resize freely with eight compass handles.
 * Imaginative tokens expose three discrete snap stops (their rect area
 * always lands on a preset). Textual tokens cannot be resized and expose
 * no handles at all.
 */

import type { ImaginationLevel, InstanceDoc } from './types.js';
import { IMAGINATIVE_AREAS } from './gestures.js';

export type CompassHandle = 'n' | 'ne' | 'e' | 'se' | 's' | 'sw' | 'w' | 'nw';

export interface SnapHandle {
  level: ImaginationLevel;
  /** Side length of the square preview for this preset area. */
  side: number;
}

export type HandleSet =
  | { kind: 'free'; handles: CompassHandle[] }
  | { kind: 'snap'; stops: SnapHandle[] }
  | { kind: 'none' };

const COMPASS: CompassHandle[] = ['n', 'ne', 'e', 'se', 's', 'sw', 'w', 'nw'];

export function resizeHandles(instance: Pick<InstanceDoc, 'kind'>): HandleSet {
  switch (instance.kind) {
    case 'textual':
      return { kind: 'none' };
    case 'imaginative':
      return {
        kind: 'snap',
        stops: (['small', 'medium', 'large'] as const).map((level) => ({
          level,
          side: Math.sqrt(IMAGINATIVE_AREAS[level]),
        })),
      };
    default:
      return { kind: 'free', handles: [...COMPASS] };
  }
}

/** True when the instance shows any draggable resize affordance. */
export function hasResizeHandles(instance: Pick<InstanceDoc, 'kind'>): boolean {
  return resizeHandles(instance).kind !== 'none';
}
