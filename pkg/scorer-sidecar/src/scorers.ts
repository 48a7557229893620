/**
 * Deterministic lexical scorer backends.
 *
 * These stand in for neural COMET/BERTScore checkpoints behind the same
 * wire protocol; the model_id reported with every response names the
 * backend so runs stay comparable. Both scorers are pure functions of
 * their inputs: identical requests always yield identical scores.
 *
 * bertscore backend: greedy one-to-one token matching between hypothesis
 * and reference, combined as F1. Self-pairs (hyp === ref) score exactly
 * 1.0 — that is this backend's documented self-similarity band.
 *
 * comet backend: source-aware blend of hyp/ref F1 with how well the
 * hypothesis preserves the source's Latin-script tokens (terminology
 * carried through in parentheses counts toward this).
 */

export interface ScoreItem {
  src: string;
  hyp: string;
  ref: string;
}

export interface Scorer {
  modelId: string;
  score(item: ScoreItem): number;
}

/** Hangul, CJK ideograph, or kana codepoint. */
function isCjk(code: number): boolean {
  return (
    (code >= 0xac00 && code <= 0xd7a3) ||
    (code >= 0x1100 && code <= 0x11ff) ||
    (code >= 0x3130 && code <= 0x318f) ||
    (code >= 0x4e00 && code <= 0x9fff) ||
    (code >= 0x3400 && code <= 0x4dbf) ||
    (code >= 0xf900 && code <= 0xfaff) ||
    (code >= 0x3040 && code <= 0x30ff)
  );
}

/**
 * Whitespace-split, then break CJK characters into single-character tokens
 * while keeping other runs (Latin words, digits, punctuation) intact.
 */
export function tokenize(text: string): string[] {
  const tokens: string[] = [];
  for (const chunk of text.split(/\s+/u)) {
    if (!chunk) continue;
    let run = "";
    for (const ch of chunk) {
      if (isCjk(ch.codePointAt(0)!)) {
        if (run) {
          tokens.push(run);
          run = "";
        }
        tokens.push(ch);
      } else {
        run += ch;
      }
    }
    if (run) tokens.push(run);
  }
  return tokens;
}

/** Greedy one-to-one exact-match F1 between two token sequences. */
export function greedyF1(hypTokens: string[], refTokens: string[]): number {
  if (hypTokens.length === 0 && refTokens.length === 0) return 1.0;
  if (hypTokens.length === 0 || refTokens.length === 0) return 0.0;
  const available = new Map<string, number>();
  for (const token of refTokens) {
    available.set(token, (available.get(token) ?? 0) + 1);
  }
  let matched = 0;
  for (const token of hypTokens) {
    const left = available.get(token) ?? 0;
    if (left > 0) {
      available.set(token, left - 1);
      matched += 1;
    }
  }
  if (matched === 0) return 0.0;
  const precision = matched / hypTokens.length;
  const recall = matched / refTokens.length;
  return (2 * precision * recall) / (precision + recall);
}

function latinTokens(text: string): Set<string> {
  const out = new Set<string>();
  for (const token of tokenize(text.toLowerCase())) {
    if (/[a-z]/.test(token)) out.add(token.replace(/[^a-z0-9'-]/g, ""));
  }
  out.delete("");
  return out;
}

/** |a ∩ b| / |a| — how much of `a` survives into `b`. */
function coverage(a: Set<string>, b: Set<string>): number {
  if (a.size === 0) return 1.0;
  let hit = 0;
  for (const token of a) {
    if (b.has(token)) hit += 1;
  }
  return hit / a.size;
}

export function createBertscoreScorer(modelId: string): Scorer {
  return {
    modelId,
    score(item: ScoreItem): number {
      return greedyF1(tokenize(item.hyp), tokenize(item.ref));
    },
  };
}

export function createCometScorer(modelId: string): Scorer {
  return {
    modelId,
    score(item: ScoreItem): number {
      const fluency = greedyF1(tokenize(item.hyp), tokenize(item.ref));
      const termCarry = coverage(latinTokens(item.src), latinTokens(item.hyp));
      return 0.8 * fluency + 0.2 * termCarry;
    },
  };
}
