/** Request handling: prompt assembly, completion, and extraction. */

import { Backend } from './backend.js';
import {
  extractAction,
  extractChosenIndex,
  extractRewardList,
  truncateMessage,
} from './extract.js';
import { BridgeRequest, BridgeResponse, detectVariant } from './wire.js';

export interface ResponderConfig {
  actingTemperature: number; // candidate diversity matters for best-of-N
  evaluationTemperature: number;
  maxMessageLength: number;
}

export const DEFAULT_RESPONDER: ResponderConfig = {
  actingTemperature: 1.0,
  evaluationTemperature: 0.0,
  maxMessageLength: 64,
};

const MALFORMED: BridgeResponse = {
  proposal: null,
  message: '',
  chosen_index: null,
  thoughts: 'malformed: nothing extractable',
};

/** The core renders the full prompt into private_info; the client only
 * appends a short format reminder so completions stay parseable. */
function buildPrompt(request: BridgeRequest): string {
  if (request.kind === 'evaluate_candidates') {
    return request.private_info;
  }
  return (
    request.private_info +
    '\n\nEnd your reply with a single JSON line like ' +
    '{"kind": "offer", "price": 50} or {"kind": "accept"} or {"kind": "wait"}.'
  );
}

export async function respond(
  request: BridgeRequest,
  backend: Backend,
  config: ResponderConfig = DEFAULT_RESPONDER,
): Promise<BridgeResponse> {
  const variant = detectVariant(request);
  const evaluating = request.kind === 'evaluate_candidates';
  let completion: string;
  try {
    completion = await backend.complete({
      kind: request.kind,
      templateId: request.template_id || request.kind,
      variant,
      prompt: buildPrompt(request),
      temperature: evaluating ? config.evaluationTemperature : config.actingTemperature,
    });
  } catch (error) {
    return { ...MALFORMED, thoughts: `malformed: ${String(error)}` };
  }

  if (evaluating) {
    const total = request.candidates?.length ?? 0;
    // self-simulation replies return per-candidate rewards instead of [x]
    const rewards = extractRewardList(completion);
    if (rewards) {
      const chosen = rewards.bestIndex + 1;
      if (chosen >= 1 && chosen <= total) {
        return {
          proposal: null,
          message: '',
          chosen_index: chosen,
          thoughts: `rewards ${JSON.stringify(rewards.rewards)}`,
        };
      }
      return MALFORMED;
    }
    const index = extractChosenIndex(completion);
    if (index === null || (total > 0 && index > total)) return MALFORMED;
    return { proposal: null, message: '', chosen_index: index, thoughts: '' };
  }

  const action = extractAction(completion, variant);
  if (action === null) return MALFORMED;
  return {
    proposal: action.proposal,
    message: truncateMessage(action.message, config.maxMessageLength),
    chosen_index: null,
    thoughts: '',
  };
}
