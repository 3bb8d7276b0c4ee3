import { describe, expect, it } from "vitest";

import { findHighlight, splitSentence } from "../src/highlight.js";

describe("findHighlight", () => {
  it("matches the worked example with inclusive offsets", () => {
    const hl = findHighlight("great video call quality", "video call");
    expect(hl).toEqual({ start: 6, end: 15 });
  });

  it("returns a span whose slice is the candidate verbatim", () => {
    const sentence = "the offline mode saved my trip";
    const hl = findHighlight(sentence, "offline mode");
    expect(hl).not.toBeNull();
    expect(sentence.slice(hl!.start, hl!.end + 1)).toBe("offline mode");
  });

  it("returns null when the candidate is absent or empty", () => {
    expect(findHighlight("no match here", "video call")).toBeNull();
    expect(findHighlight("anything", "")).toBeNull();
  });

  it("stays inside sentence bounds for random substrings", () => {
    const sentence = "syncing notes across devices just works";
    for (let start = 0; start < sentence.length; start++) {
      for (let len = 1; start + len <= sentence.length; len += 3) {
        const candidate = sentence.slice(start, start + len);
        const hl = findHighlight(sentence, candidate);
        expect(hl).not.toBeNull();
        expect(hl!.start).toBeGreaterThanOrEqual(0);
        expect(hl!.end).toBeLessThan(sentence.length);
        expect(hl!.end - hl!.start + 1).toBe(candidate.length);
      }
    }
  });
});

describe("splitSentence", () => {
  it("reassembles the original sentence", () => {
    const sentence = "great video call quality";
    const parts = splitSentence(sentence, { start: 6, end: 15 });
    expect(parts).toEqual({ before: "great ", match: "video call", after: " quality" });
    expect(parts.before + parts.match + parts.after).toBe(sentence);
  });

  it("rejects out-of-bounds highlights", () => {
    expect(() => splitSentence("short", { start: 2, end: 99 })).toThrow(/bounds/);
    expect(() => splitSentence("short", { start: -1, end: 2 })).toThrow(/bounds/);
    expect(() => splitSentence("short", { start: 3, end: 1 })).toThrow(/bounds/);
  });
});
