/**
 * DOM rendering. Everything here paints server-provided values as-is:
 * results render in response order with no sorting, filtering, or
 * rescaling, and every number on screen is a formatted API field.
 */

import type { LibraryPage, Preset, QueryResult } from "./api.js";
import { CUSTOM, MixerState, SLIDER_MAX, SLIDER_MIN } from "./state.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

// --- presets -------------------------------------------------------------

export function renderPresetSelect(
  select: HTMLSelectElement,
  presets: readonly Preset[],
  activeName: string,
): void {
  const doc = select.ownerDocument;
  select.textContent = "";
  const custom = el(doc, "option", undefined, CUSTOM);
  custom.value = CUSTOM;
  custom.disabled = true;
  select.appendChild(custom);
  for (const preset of presets) {
    const option = el(doc, "option", undefined, preset.name);
    option.value = preset.name;
    select.appendChild(option);
  }
  select.value = activeName;
}

// --- sliders -------------------------------------------------------------

export function buildSliders(
  container: HTMLElement,
  state: MixerState,
  onMove: (channel: string, value: number) => void,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  for (const channel of state.channels) {
    const row = el(doc, "div", "slider-row");
    const label = el(doc, "label", "slider-label", channel);
    const input = el(doc, "input");
    input.type = "range";
    input.min = String(SLIDER_MIN);
    input.max = String(SLIDER_MAX);
    input.step = "0.01";
    input.dataset.channel = channel;
    const output = el(doc, "output", "slider-value");
    input.addEventListener("input", () => {
      onMove(channel, Number(input.value));
    });
    row.append(label, input, output);
    container.appendChild(row);
  }
  updateSliderValues(container, state);
}

export function updateSliderValues(
  container: HTMLElement,
  state: MixerState,
): void {
  for (const input of container.querySelectorAll<HTMLInputElement>(
    "input[type=range]",
  )) {
    const channel = input.dataset.channel;
    if (channel === undefined) {
      continue;
    }
    const value = state.sliders[channel];
    input.value = String(value);
    const output = input.parentElement?.querySelector("output");
    if (output) {
      output.textContent = value.toFixed(2);
    }
  }
}

// --- results -------------------------------------------------------------

export function renderResults(
  list: HTMLElement,
  results: readonly QueryResult[],
  channels: readonly string[],
): void {
  const doc = list.ownerDocument;
  list.textContent = "";
  for (const result of results) {
    const row = el(doc, "li", "result-row");
    const head = el(doc, "div", "result-head");
    head.append(
      el(doc, "span", "result-rank", String(result.rank)),
      el(doc, "span", "result-id", result.segment_id),
      el(doc, "span", "result-score", result.score.toFixed(3)),
    );
    const bars = el(doc, "div", "result-bars");
    const largest = Math.max(
      1e-12,
      ...channels.map((channel) => Math.abs(result.breakdown[channel] ?? 0)),
    );
    for (const channel of channels) {
      const value = result.breakdown[channel] ?? 0;
      const cell = el(doc, "div", "bar-cell");
      cell.title = `${channel}: ${value}`;
      const bar = el(
        doc,
        "div",
        value < 0 ? "bar bar-negative" : "bar",
      );
      bar.style.width = `${(Math.abs(value) / largest) * 100}%`;
      bar.dataset.channel = channel;
      bar.dataset.value = String(value);
      cell.append(bar, el(doc, "span", "bar-label", channel));
      bars.appendChild(cell);
    }
    row.append(head, bars);
    list.appendChild(row);
  }
}

// --- library browser -----------------------------------------------------

export interface LibraryHandlers {
  onPick(segmentId: string): void;
  onPage(offset: number): void;
}

export function renderLibrary(
  container: HTMLElement,
  page: LibraryPage,
  selected: string | null,
  handlers: LibraryHandlers,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  const list = el(doc, "ul", "library-list");
  for (const segment of page.segments) {
    const item = el(doc, "li");
    const button = el(doc, "button", "library-item", segment.segment_id);
    button.type = "button";
    if (segment.segment_id === selected) {
      button.classList.add("selected");
    }
    button.addEventListener("click", () => {
      handlers.onPick(segment.segment_id);
    });
    item.appendChild(button);
    list.appendChild(item);
  }
  const pager = el(doc, "div", "library-pager");
  const prev = el(doc, "button", "pager-prev", "prev");
  prev.type = "button";
  prev.disabled = page.offset === 0;
  prev.addEventListener("click", () => {
    handlers.onPage(Math.max(0, page.offset - page.limit));
  });
  const next = el(doc, "button", "pager-next", "next");
  next.type = "button";
  next.disabled = page.offset + page.limit >= page.total;
  next.addEventListener("click", () => {
    handlers.onPage(page.offset + page.limit);
  });
  const where = el(
    doc,
    "span",
    "pager-where",
    `${page.offset + 1}-${Math.min(page.offset + page.limit, page.total)} of ${page.total}`,
  );
  pager.append(prev, where, next);
  container.append(list, pager);
}

// --- error banner and inline hint ----------------------------------------

export function showBanner(
  banner: HTMLElement,
  message: string,
  onRetry: () => void,
): void {
  const doc = banner.ownerDocument;
  banner.textContent = "";
  banner.appendChild(el(doc, "span", "banner-message", message));
  const retry = el(doc, "button", "banner-retry", "retry");
  retry.type = "button";
  retry.addEventListener("click", () => {
    clearBanner(banner);
    onRetry();
  });
  banner.appendChild(retry);
  banner.hidden = false;
}

export function clearBanner(banner: HTMLElement): void {
  banner.textContent = "";
  banner.hidden = true;
}

export function showHint(hint: HTMLElement, message: string): void {
  hint.textContent = message;
  hint.hidden = false;
}

export function clearHint(hint: HTMLElement): void {
  hint.textContent = "";
  hint.hidden = true;
}
