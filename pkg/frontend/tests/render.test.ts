import { describe, expect, it, vi } from "vitest";

import type { LibraryPage, QueryResult } from "../src/api.js";
import {
  buildSliders,
  clearBanner,
  clearHint,
  renderLibrary,
  renderPresetSelect,
  renderResults,
  showBanner,
  showHint,
  updateSliderValues,
} from "../src/render.js";
import { initialState, moveSlider } from "../src/state.js";

const CHANNELS = ["bass", "drums", "mix"];

function result(
  rank: number,
  segmentId: string,
  score: number,
  breakdown: Record<string, number>,
): QueryResult {
  return { rank, segment_id: segmentId, score, breakdown, display: {} };
}

function div(): HTMLElement {
  return document.createElement("div");
}

describe("renderResults", () => {
  it("paints rows in response order even when scores look unsorted", () => {
    // deliberately non-monotonic scores: the service's order is truth
    // here, and the renderer must not "fix" it
    const results = [
      result(1, "seg-low", 0.2, { mix: 0.2 }),
      result(2, "seg-high", 0.9, { mix: 0.9 }),
      result(3, "seg-mid", 0.5, { mix: 0.5 }),
    ];
    const list = div();
    renderResults(list, results, CHANNELS);
    const ids = [...list.querySelectorAll(".result-id")].map(
      (node) => node.textContent,
    );
    expect(ids).toEqual(["seg-low", "seg-high", "seg-mid"]);
    const ranks = [...list.querySelectorAll(".result-rank")].map(
      (node) => node.textContent,
    );
    expect(ranks).toEqual(["1", "2", "3"]);
  });

  it("shows the server's score to three decimals", () => {
    const list = div();
    renderResults(list, [result(1, "seg-a", 1.23456, { mix: 1.23456 })], [
      "mix",
    ]);
    expect(list.querySelector(".result-score")!.textContent).toBe("1.235");
  });

  it("draws one bar per channel with the raw contribution attached", () => {
    const list = div();
    renderResults(
      list,
      [result(1, "seg-a", 0.35, { bass: 0.6, drums: -0.25, mix: 0.3 })],
      CHANNELS,
    );
    const bars = [...list.querySelectorAll<HTMLElement>(".bar")];
    expect(bars.map((bar) => bar.dataset.channel)).toEqual(CHANNELS);
    expect(bars.map((bar) => bar.dataset.value)).toEqual([
      "0.6",
      "-0.25",
      "0.3",
    ]);
    // widths scale against the row's largest magnitude (0.6)
    expect(bars[0]!.style.width).toBe("100%");
    expect(bars[2]!.style.width).toBe("50%");
    expect(bars[1]!.classList.contains("bar-negative")).toBe(true);
    expect(bars[0]!.classList.contains("bar-negative")).toBe(false);
    expect(bars[1]!.parentElement!.title).toBe("drums: -0.25");
  });

  it("survives an all-zero breakdown without dividing by zero", () => {
    const list = div();
    renderResults(
      list,
      [result(1, "seg-a", 0, { bass: 0, drums: 0, mix: 0 })],
      CHANNELS,
    );
    for (const bar of list.querySelectorAll<HTMLElement>(".bar")) {
      expect(bar.style.width).toBe("0%");
    }
  });

  it("replaces previous rows instead of appending", () => {
    const list = div();
    renderResults(list, [result(1, "seg-a", 1, { mix: 1 })], ["mix"]);
    renderResults(list, [result(1, "seg-b", 1, { mix: 1 })], ["mix"]);
    const ids = [...list.querySelectorAll(".result-id")].map(
      (node) => node.textContent,
    );
    expect(ids).toEqual(["seg-b"]);
  });
});

describe("renderPresetSelect", () => {
  const presets = [
    { name: "mix-only", method: "builtin", lambda: null, weights: {} },
    { name: "fitted", method: "ridge", lambda: 0.1, weights: {} },
  ];

  it("offers a disabled custom sentinel plus the presets in order", () => {
    const select = document.createElement("select");
    renderPresetSelect(select, presets, "custom");
    const options = [...select.querySelectorAll("option")];
    expect(options.map((option) => option.value)).toEqual([
      "custom",
      "mix-only",
      "fitted",
    ]);
    expect(options[0]!.disabled).toBe(true);
    expect(options[1]!.disabled).toBe(false);
    expect(select.value).toBe("custom");
  });

  it("marks the active preset as selected", () => {
    const select = document.createElement("select");
    renderPresetSelect(select, presets, "fitted");
    expect(select.value).toBe("fitted");
  });
});

describe("sliders", () => {
  it("builds one row per channel in API order", () => {
    const box = div();
    buildSliders(box, initialState(CHANNELS), () => {});
    const inputs = [...box.querySelectorAll<HTMLInputElement>("input")];
    expect(inputs.map((input) => input.dataset.channel)).toEqual(CHANNELS);
    for (const input of inputs) {
      expect(input.min).toBe("-1");
      expect(input.max).toBe("2");
      expect(input.step).toBe("0.01");
      expect(input.value).toBe("0");
    }
    const labels = [...box.querySelectorAll(".slider-label")].map(
      (node) => node.textContent,
    );
    expect(labels).toEqual(CHANNELS);
  });

  it("reports drags through the callback", () => {
    const box = div();
    const onMove = vi.fn();
    buildSliders(box, initialState(CHANNELS), onMove);
    const drums = box.querySelector<HTMLInputElement>(
      "input[data-channel=drums]",
    )!;
    drums.value = "1.5";
    drums.dispatchEvent(new Event("input"));
    expect(onMove).toHaveBeenCalledWith("drums", 1.5);
  });

  it("writes state values back into the controls", () => {
    const box = div();
    let state = initialState(CHANNELS);
    buildSliders(box, state, () => {});
    state = moveSlider(state, "bass", -0.5);
    updateSliderValues(box, state);
    const bass = box.querySelector<HTMLInputElement>(
      "input[data-channel=bass]",
    )!;
    expect(bass.value).toBe("-0.5");
    expect(bass.parentElement!.querySelector("output")!.textContent).toBe(
      "-0.50",
    );
  });
});

describe("renderLibrary", () => {
  function page(offset: number, limit: number, total: number): LibraryPage {
    const segments = [];
    for (let i = offset; i < Math.min(offset + limit, total); i += 1) {
      segments.push({ segment_id: `seg-${i}`, display: {} });
    }
    return {
      total,
      offset,
      limit,
      segments,
      provenance: { encoder: "e", source: "s", config: "c" },
    };
  }

  it("lists the page's segments as buttons and flags the selection", () => {
    const box = div();
    renderLibrary(box, page(0, 3, 9), "seg-1", {
      onPick: () => {},
      onPage: () => {},
    });
    const buttons = [...box.querySelectorAll(".library-item")];
    expect(buttons.map((button) => button.textContent)).toEqual([
      "seg-0",
      "seg-1",
      "seg-2",
    ]);
    expect(buttons[1]!.classList.contains("selected")).toBe(true);
    expect(buttons[0]!.classList.contains("selected")).toBe(false);
  });

  it("reports picks with the segment id", () => {
    const box = div();
    const onPick = vi.fn();
    renderLibrary(box, page(0, 3, 9), null, { onPick, onPage: () => {} });
    (box.querySelectorAll(".library-item")[2] as HTMLElement).click();
    expect(onPick).toHaveBeenCalledWith("seg-2");
  });

  it("disables prev on the first page and next on the last", () => {
    const box = div();
    renderLibrary(box, page(0, 3, 9), null, {
      onPick: () => {},
      onPage: () => {},
    });
    expect(box.querySelector<HTMLButtonElement>(".pager-prev")!.disabled).toBe(
      true,
    );
    expect(box.querySelector<HTMLButtonElement>(".pager-next")!.disabled).toBe(
      false,
    );

    renderLibrary(box, page(6, 3, 9), null, {
      onPick: () => {},
      onPage: () => {},
    });
    expect(box.querySelector<HTMLButtonElement>(".pager-prev")!.disabled).toBe(
      false,
    );
    expect(box.querySelector<HTMLButtonElement>(".pager-next")!.disabled).toBe(
      true,
    );
  });

  it("describes the window and pages by one limit at a time", () => {
    const box = div();
    const onPage = vi.fn();
    renderLibrary(box, page(3, 3, 8), null, { onPick: () => {}, onPage });
    expect(box.querySelector(".pager-where")!.textContent).toBe("4-6 of 8");
    box.querySelector<HTMLButtonElement>(".pager-next")!.click();
    expect(onPage).toHaveBeenCalledWith(6);
    box.querySelector<HTMLButtonElement>(".pager-prev")!.click();
    expect(onPage).toHaveBeenCalledWith(0);
  });

  it("clips the window label to the library size", () => {
    const box = div();
    renderLibrary(box, page(6, 3, 8), null, {
      onPick: () => {},
      onPage: () => {},
    });
    expect(box.querySelector(".pager-where")!.textContent).toBe("7-8 of 8");
  });
});

describe("banner and hint", () => {
  it("shows a message with a retry control", () => {
    const banner = div();
    const onRetry = vi.fn();
    showBanner(banner, "service unreachable", onRetry);
    expect(banner.hidden).toBe(false);
    expect(banner.querySelector(".banner-message")!.textContent).toBe(
      "service unreachable",
    );
    banner.querySelector<HTMLButtonElement>(".banner-retry")!.click();
    expect(onRetry).toHaveBeenCalledTimes(1);
    expect(banner.hidden).toBe(true); // retry clears before re-running
  });

  it("clears cleanly", () => {
    const banner = div();
    showBanner(banner, "boom", () => {});
    clearBanner(banner);
    expect(banner.hidden).toBe(true);
    expect(banner.textContent).toBe("");
  });

  it("hints inline and clears", () => {
    const hint = div();
    showHint(hint, "set at least one weight");
    expect(hint.hidden).toBe(false);
    expect(hint.textContent).toBe("set at least one weight");
    clearHint(hint);
    expect(hint.hidden).toBe(true);
  });
});
