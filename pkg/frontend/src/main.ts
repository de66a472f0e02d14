/**
 * Application wiring: build the page, load presets and library from the
 * service, and keep results in sync with the mixer state through the
 * debounced scheduler.
 */

import { ApiClient, ApiError, Preset } from "./api.js";
import {
  CUSTOM,
  MixerState,
  applyPreset,
  hasActiveWeight,
  initialState,
  moveSlider,
  setReference,
  setResults,
  setTopK,
} from "./state.js";
import { DEBOUNCE_MS, QueryScheduler } from "./query.js";
import {
  buildSliders,
  clearBanner,
  clearHint,
  el,
  renderLibrary,
  renderPresetSelect,
  renderResults,
  showBanner,
  showHint,
  updateSliderValues,
} from "./render.js";

export interface BootOptions {
  pageSize?: number;
  debounceMs?: number;
}

export interface App {
  getState(): MixerState;
  loadPresets(): Promise<void>;
  loadLibrary(offset: number): Promise<void>;
}

export async function boot(
  root: HTMLElement,
  client: ApiClient,
  options: BootOptions = {},
): Promise<App> {
  const doc = root.ownerDocument;
  const pageSize = options.pageSize ?? 50;

  // --- skeleton ---
  root.textContent = "";
  const banner = el(doc, "div", "banner");
  banner.hidden = true;
  const header = el(doc, "header");
  header.append(
    el(doc, "h1", undefined, "weight mixer"),
    el(doc, "span", "provenance"),
  );
  const presetSection = el(doc, "section", "presets");
  const presetLabel = el(doc, "label", undefined, "preset ");
  const presetSelect = el(doc, "select", "preset-select");
  presetLabel.appendChild(presetSelect);
  presetSection.appendChild(presetLabel);
  const sliderSection = el(doc, "section", "sliders");
  const sliderBox = el(doc, "div", "slider-box");
  const hint = el(doc, "div", "hint");
  hint.hidden = true;
  sliderSection.append(sliderBox, hint);
  const librarySection = el(doc, "section", "library");
  librarySection.appendChild(el(doc, "h2", undefined, "reference"));
  const libraryBox = el(doc, "div", "library-box");
  librarySection.appendChild(libraryBox);
  const resultSection = el(doc, "section", "results");
  const resultHead = el(doc, "h2", undefined, "results");
  const topKLabel = el(doc, "label", undefined, "top k ");
  const topKInput = el(doc, "input", "top-k");
  topKInput.type = "number";
  topKInput.min = "1";
  const resultList = el(doc, "ol", "result-list");
  topKLabel.appendChild(topKInput);
  resultSection.append(resultHead, topKLabel, resultList);
  root.append(
    banner,
    header,
    presetSection,
    sliderSection,
    librarySection,
    resultSection,
  );

  // --- state and scheduler ---
  let state = initialState([]);
  let presets: readonly Preset[] = [];
  let libraryOffset = 0;

  const scheduler = new QueryScheduler(
    client,
    {
      onResults(response) {
        state = setResults(state, response.results);
        clearHint(hint);
        clearBanner(banner);
        renderResults(resultList, response.results, state.channels);
      },
      onError(error) {
        if (error instanceof ApiError && error.status === 422) {
          showHint(hint, "set at least one weight");
          return;
        }
        if (error instanceof ApiError && error.status === 404) {
          // the reference disappeared from the library: reset the picker
          state = setResults(setReference(state, null), null);
          resultList.textContent = "";
          void loadLibrary(libraryOffset);
          return;
        }
        showBanner(banner, "similarity service unreachable", () => {
          scheduler.request(state);
        });
      },
      onValidation(message) {
        showHint(hint, message);
      },
    },
    options.debounceMs ?? DEBOUNCE_MS,
  );

  function requery(): void {
    if (state.reference !== null && hasActiveWeight(state)) {
      clearHint(hint);
    }
    scheduler.request(state);
  }

  // --- loaders ---
  async function loadPresets(): Promise<void> {
    let response;
    try {
      response = await client.presets();
    } catch {
      showBanner(banner, "could not load presets", () => {
        void loadPresets();
      });
      return;
    }
    presets = response.presets;
    const previous = state;
    state = initialState(response.channels);
    state = setReference(state, previous.reference);
    state = setTopK(state, previous.topK);
    header.querySelector(".provenance")!.textContent =
      `${response.provenance.config} · ${response.provenance.encoder} · ${response.provenance.source}`;
    renderPresetSelect(presetSelect, presets, state.presetName);
    buildSliders(sliderBox, state, (channel, value) => {
      state = moveSlider(state, channel, value);
      updateSliderValues(sliderBox, state);
      presetSelect.value = CUSTOM;
      requery();
    });
  }

  async function loadLibrary(offset: number): Promise<void> {
    let page;
    try {
      page = await client.library(offset, pageSize);
    } catch {
      showBanner(banner, "could not load the segment library", () => {
        void loadLibrary(offset);
      });
      return;
    }
    libraryOffset = offset;
    renderLibrary(libraryBox, page, state.reference, {
      onPick(segmentId) {
        state = setReference(state, segmentId);
        for (const button of libraryBox.querySelectorAll(".library-item")) {
          button.classList.toggle(
            "selected",
            button.textContent === segmentId,
          );
        }
        requery();
      },
      onPage(nextOffset) {
        void loadLibrary(nextOffset);
      },
    });
  }

  // --- fixed control wiring ---
  presetSelect.addEventListener("change", () => {
    const preset = presets.find((p) => p.name === presetSelect.value);
    if (!preset) {
      return;
    }
    state = applyPreset(state, preset);
    updateSliderValues(sliderBox, state);
    requery();
  });
  topKInput.value = String(state.topK);
  topKInput.addEventListener("change", () => {
    state = setTopK(state, Number(topKInput.value));
    topKInput.value = String(state.topK);
    requery();
  });

  await loadPresets();
  await loadLibrary(0);
  topKInput.value = String(state.topK);

  return {
    getState: () => state,
    loadPresets,
    loadLibrary,
  };
}
