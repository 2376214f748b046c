import { describe, expect, it } from 'vitest';
import { fileURLToPath } from 'node:url';
import { dirname, join } from 'node:path';
import { StubBackend, Backend, CompletionQuery } from '../src/backend.js';
import { respond } from '../src/respond.js';
import { handleLine } from '../src/transport.js';
import { BridgeRequest } from '../src/wire.js';

const STUB_DIR = join(dirname(fileURLToPath(import.meta.url)), '..', 'stub_completions');

function request(overrides: Partial<BridgeRequest>): BridgeRequest {
  return {
    kind: 'act',
    role: 1,
    template_id: 'act',
    private_info: 'You are agent 1 in a repeated price negotiation...',
    context: [],
    trajectory: [],
    candidates: null,
    nonce: 'n',
    ...overrides,
  };
}

class FixedBackend implements Backend {
  constructor(private readonly text: string) {}
  async complete(_query: CompletionQuery): Promise<string> {
    return this.text;
  }
}

describe('respond', () => {
  it('answers act requests from the canned directory', async () => {
    const response = await respond(request({}), new StubBackend(STUB_DIR));
    expect(response.proposal).toEqual({ kind: 'offer', price: 50 });
  });

  it('routes exchange requests to the exchange completion', async () => {
    const response = await respond(
      request({ private_info: 'You are agent 1 in a repeated resource-exchange negotiation...' }),
      new StubBackend(STUB_DIR),
    );
    expect(response.proposal).toEqual({ kind: 'offer', dx: -1, dy: 3 });
  });

  it('turns an acceptance completion into an accept proposal', async () => {
    const response = await respond(request({}), new FixedBackend('Deal. I accept.'));
    expect(response.proposal?.kind).toBe('accept');
  });

  it('extracts the evaluator index from the final [x] line', async () => {
    const response = await respond(
      request({
        kind: 'evaluate_candidates',
        template_id: 'evaluate',
        candidates: [
          { proposal: { kind: 'offer', price: 50 }, message: 'greeting' },
          { proposal: { kind: 'wait' }, message: 'greeting' },
          { proposal: { kind: 'accept' }, message: 'greeting' },
        ],
      }),
      new FixedBackend('the second option stalls\n[2]'),
    );
    expect(response.chosen_index).toBe(2);
  });

  it('derives the choice from a reward list for self-simulation requests', async () => {
    const response = await respond(
      request({
        kind: 'evaluate_candidates',
        template_id: 'self_simulate',
        candidates: [
          { proposal: { kind: 'offer', price: 48 }, message: 'greeting' },
          { proposal: { kind: 'offer', price: 55 }, message: 'greeting' },
          { proposal: { kind: 'offer', price: 60 }, message: 'greeting' },
        ],
      }),
      new StubBackend(STUB_DIR),
    );
    // canned rewards [3, 7, 5]: best 0-based index 1, wire choice 2
    expect(response.chosen_index).toBe(2);
  });

  it('flags unusable completions as malformed instead of crashing', async () => {
    const response = await respond(request({}), new FixedBackend('???'));
    expect(response.proposal).toBeNull();
    expect(response.thoughts).toContain('malformed');
  });

  it('flags out-of-range evaluator choices as malformed', async () => {
    const response = await respond(
      request({
        kind: 'evaluate_candidates',
        template_id: 'evaluate',
        candidates: [{ proposal: { kind: 'wait' }, message: 'greeting' }],
      }),
      new FixedBackend('[4]'),
    );
    expect(response.chosen_index).toBeNull();
  });
});

describe('handleLine', () => {
  it('answers a serialized request with a serialized response', async () => {
    const line = JSON.stringify(request({}));
    const reply = JSON.parse(await handleLine(line, new StubBackend(STUB_DIR)));
    expect(reply.proposal.kind).toBe('offer');
  });

  it('answers unparseable input with a malformed marker', async () => {
    const reply = JSON.parse(await handleLine('not json', new StubBackend(STUB_DIR)));
    expect(reply.proposal).toBeNull();
    expect(reply.thoughts).toContain('malformed');
  });
});
