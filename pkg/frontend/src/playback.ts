/**
 * Staged-result playback.
 *
 * After Generate, the studio shows each intermediate stage image in plan
 * order and ends on the final image. The final frame always equals the
 * artifact's final.png (which the renderer guarantees is the last stage's
 * output), so the history thumbnail and the last playback frame agree.
 */

import type { ArtifactRef } from './types.js';

export interface PlaybackFrame {
  label: string;
  url: string;
}

/** Stage frames in plan order, then the final image. */
export function playbackFrames(artifact: ArtifactRef): PlaybackFrame[] {
  const frames: PlaybackFrame[] = artifact.stages.map((stage) => ({
    label: stage.stage,
    url: stage.url,
  }));
  frames.push({ label: 'final', url: artifact.final });
  return frames;
}

/**
 * Drive a frame consumer on a timer. Returns a cancel function; the
 * consumer receives each frame once, in order.
 */
export function playStages(
  artifact: ArtifactRef,
  show: (frame: PlaybackFrame, index: number, total: number) => void,
  intervalMs = 650,
  schedule: (fn: () => void, ms: number) => unknown = setTimeout,
  cancelScheduled: (handle: unknown) => void = (handle) =>
    clearTimeout(handle as Parameters<typeof clearTimeout>[0]),
): () => void {
  const frames = playbackFrames(artifact);
  let cancelled = false;
  let pending: unknown = null;

  const step = (index: number): void => {
    if (cancelled || index >= frames.length) {
      return;
    }
    show(frames[index]!, index, frames.length);
    pending = schedule(() => step(index + 1), intervalMs);
  };
  step(0);

  return () => {
    cancelled = true;
    if (pending !== null) {
      cancelScheduled(pending);
    }
  };
}
