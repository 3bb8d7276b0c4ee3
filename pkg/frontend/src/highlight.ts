// Locating the candidate span inside its review sentence. Offsets are
// inclusive character indexes; "video call" in "great video call quality"
// spans characters 6-15.

export interface Highlight {
  start: number;
  end: number;
}

export function findHighlight(sentence: string, candidate: string): Highlight | null {
  if (!candidate) {
    return null;
  }
  const start = sentence.indexOf(candidate);
  if (start < 0) {
    return null;
  }
  return { start, end: start + candidate.length - 1 };
}

export interface SentenceParts {
  before: string;
  match: string;
  after: string;
}

// Split the sentence around the highlight so the renderer can wrap the
// match verbatim without any HTML-escaping pitfalls.
export function splitSentence(sentence: string, hl: Highlight): SentenceParts {
  if (hl.start < 0 || hl.end >= sentence.length || hl.end < hl.start) {
    throw new Error(`highlight ${hl.start}-${hl.end} outside sentence bounds`);
  }
  return {
    before: sentence.slice(0, hl.start),
    match: sentence.slice(hl.start, hl.end + 1),
    after: sentence.slice(hl.end + 1),
  };
}
