/** Frame sampling schedule for video narration. */

export const DEFAULT_NARRATION_FPS = 1 / 3;

/**
 * Timestamps (seconds) at which frames are sampled: 0, 1/fps, 2/fps, ...
 * strictly below the video duration.
 */
export function narrationSchedule(durationS: number, fps: number): number[] {
  if (durationS <= 0) {
    throw new Error(`durationS must be positive, got ${durationS}`);
  }
  if (fps <= 0) {
    throw new Error(`fps must be positive, got ${fps}`);
  }
  const step = 1 / fps;
  const stamps: number[] = [];
  for (let k = 0; k * step < durationS; k += 1) {
    stamps.push(k * step);
  }
  return stamps;
}
