/**
 * Mixer state and its pure transitions.
 *
 * State is immutable: every transition returns a fresh object, which
 * keeps the render path a straight function of state and makes the
 * transitions trivially testable.
 */

import type { Preset, QueryResult } from "./api.js";

/** Range the slider controls offer for dragging. */
export const SLIDER_MIN = -1;
export const SLIDER_MAX = 2;

export const DEFAULT_TOP_K = 10;

/** Preset label meaning "the user moved something by hand". */
export const CUSTOM = "custom";

export interface MixerState {
  /** Channel order as served by the API; slider order follows it. */
  readonly channels: readonly string[];
  readonly reference: string | null;
  readonly sliders: Readonly<Record<string, number>>;
  readonly presetName: string;
  readonly topK: number;
  readonly results: readonly QueryResult[] | null;
}

export function initialState(channels: readonly string[]): MixerState {
  const sliders: Record<string, number> = {};
  for (const channel of channels) {
    sliders[channel] = 0;
  }
  return {
    channels: [...channels],
    reference: null,
    sliders,
    presetName: CUSTOM,
    topK: DEFAULT_TOP_K,
    results: null,
  };
}

/**
 * Move one slider. User interaction is clamped to the control's range
 * and always demotes the active preset to "custom".
 */
export function moveSlider(
  state: MixerState,
  channel: string,
  value: number,
): MixerState {
  if (!(channel in state.sliders)) {
    throw new Error(`unknown channel ${channel}`);
  }
  const clamped = Math.min(SLIDER_MAX, Math.max(SLIDER_MIN, value));
  return {
    ...state,
    sliders: { ...state.sliders, [channel]: clamped },
    presetName: CUSTOM,
  };
}

/**
 * Apply a preset: sliders take the preset's values exactly (no
 * clamping — fitted weights may sit outside the drag range and are
 * shown honestly) and the state carries the preset's name until any
 * slider moves.
 */
export function applyPreset(state: MixerState, preset: Preset): MixerState {
  const sliders: Record<string, number> = {};
  for (const channel of state.channels) {
    sliders[channel] = preset.weights[channel] ?? 0;
  }
  return { ...state, sliders, presetName: preset.name };
}

export function setReference(
  state: MixerState,
  reference: string | null,
): MixerState {
  return { ...state, reference };
}

export function setTopK(state: MixerState, topK: number): MixerState {
  return { ...state, topK: Math.max(1, Math.round(topK)) };
}

export function setResults(
  state: MixerState,
  results: readonly QueryResult[] | null,
): MixerState {
  return { ...state, results };
}

/** A query is only meaningful with at least one nonzero weight. */
export function hasActiveWeight(state: MixerState): boolean {
  return state.channels.some((channel) => state.sliders[channel] !== 0);
}
