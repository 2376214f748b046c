/** Total extraction: every completion maps to a structured result or an
 * explicit malformed marker; this module never throws on model text. */

import { GameVariant, WireProposal } from './wire.js';

export interface ExtractedAction {
  proposal: WireProposal;
  message: string;
}

export interface RewardList {
  rewards: number[];
  /** 0-based position of the largest reward (earliest wins ties). */
  bestIndex: number;
}

const JSON_BLOCK = /\{[^{}]*"kind"[^{}]*\}/g;
const INDEX_LINE = /\[\s*(\d+)\s*\]/g;
const REWARD_LIST = /<reward list>\s*\[([^\]]*)\]\s*<\/reward list>/i;
const TRANSFER = /dx\s*[=:]?\s*(-?\d+)\s*[,;]?\s*dy\s*[=:]?\s*(-?\d+)/i;
const PAIR = /\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)/;
const NUMBER = /-?\d+(?:\.\d+)?/g;

function lastMatch(pattern: RegExp, text: string): RegExpExecArray | null {
  let out: RegExpExecArray | null = null;
  for (const match of text.matchAll(pattern)) out = match as RegExpExecArray;
  return out;
}

/** Prefer an explicit trailing structured block ({"kind": ...}). */
function structuredBlock(text: string): ExtractedAction | null {
  const match = lastMatch(JSON_BLOCK, text);
  if (!match) return null;
  try {
    const doc = JSON.parse(match[0]) as WireProposal & { message?: string };
    if (!doc.kind) return null;
    const proposal: WireProposal = { kind: doc.kind };
    if (doc.price !== undefined) proposal.price = Number(doc.price);
    if (doc.dx !== undefined) proposal.dx = Number(doc.dx);
    if (doc.dy !== undefined) proposal.dy = Number(doc.dy);
    return { proposal, message: doc.message ?? '' };
  } catch {
    return null;
  }
}

/** Completion text -> action; null when nothing extractable remains. */
export function extractAction(text: string, variant: GameVariant): ExtractedAction | null {
  const block = structuredBlock(text);
  if (block) return block;
  const lower = text.toLowerCase();
  if (/\bi\s+accept\b|\baccept(?:ed|s)?\b/.test(lower)) {
    return { proposal: { kind: 'accept' }, message: '' };
  }
  if (/\breject(?:ed|s)?\b|\brefuse\b|\bno\s+deal\b/.test(lower)) {
    return { proposal: { kind: 'reject' }, message: '' };
  }
  if (variant === 'resource_exchange') {
    const transfer = TRANSFER.exec(text) ?? PAIR.exec(text);
    if (transfer) {
      return {
        proposal: { kind: 'offer', dx: Number(transfer[1]), dy: Number(transfer[2]) },
        message: '',
      };
    }
  } else {
    // fall back to the last number in the text as the proposed price
    const number = lastMatch(NUMBER, text);
    if (number) {
      return { proposal: { kind: 'offer', price: Number(number[0]) }, message: '' };
    }
  }
  if (/\bwait(?:ing|s)?\b/.test(lower)) {
    return { proposal: { kind: 'wait' }, message: '' };
  }
  return null;
}

/** Final "[x]" declaration of an evaluator; 1-based, null when absent. */
export function extractChosenIndex(text: string): number | null {
  const match = lastMatch(INDEX_LINE, text);
  if (!match) return null;
  const value = Number(match[1]);
  return Number.isInteger(value) && value >= 1 ? value : null;
}

/** "<reward list> [r1, r2, ...] </reward list>" of a self-simulation reply. */
export function extractRewardList(text: string): RewardList | null {
  const match = REWARD_LIST.exec(text);
  if (!match) return null;
  const rewards = match[1]
    .split(',')
    .map((part) => part.trim())
    .filter((part) => part.length > 0)
    .map(Number)
    .filter((value) => Number.isFinite(value));
  if (rewards.length === 0) return null;
  let bestIndex = 0;
  for (let i = 1; i < rewards.length; i += 1) {
    if (rewards[i] > rewards[bestIndex]) bestIndex = i;
  }
  return { rewards, bestIndex };
}

/** Clip free-format messages before they reach the token-based core. */
export function truncateMessage(message: string, maxLength: number): string {
  return message.length <= maxLength ? message : message.slice(0, maxLength);
}
