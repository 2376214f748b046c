/** Wire schema shared with the negotiation core (field names are fixed). */

export type RequestKind = 'act' | 'simulate_opponent' | 'evaluate_candidates';

export interface WireProposal {
  kind: 'offer' | 'accept' | 'reject' | 'wait';
  price?: number;
  dx?: number;
  dy?: number;
}

export interface BridgeRequest {
  kind: RequestKind;
  role: number;
  template_id: string;
  private_info: string;
  context: unknown[];
  trajectory: Array<{ h: number; agent: number; proposal: WireProposal; message: string }>;
  candidates: Array<{ proposal: WireProposal; message: string }> | null;
  nonce: string;
}

export interface BridgeResponse {
  proposal: WireProposal | null;
  message: string;
  chosen_index: number | null;
  thoughts: string;
}

export function parseRequest(line: string): BridgeRequest | null {
  try {
    const doc = JSON.parse(line) as BridgeRequest;
    if (!doc || typeof doc !== 'object' || typeof doc.kind !== 'string') return null;
    return doc;
  } catch {
    return null;
  }
}

export type GameVariant = 'buyer_seller' | 'resource_exchange';

/** The rendered rules text names the game; the trajectory confirms it. */
export function detectVariant(request: BridgeRequest): GameVariant {
  if (request.private_info.includes('resource-exchange')) return 'resource_exchange';
  for (const turn of request.trajectory) {
    if (turn.proposal && turn.proposal.dx !== undefined) return 'resource_exchange';
  }
  return 'buyer_seller';
}
