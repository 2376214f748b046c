/** Line-delimited JSON loop over standard streams, one request at a time. */

import { createInterface } from 'node:readline';
import { Backend } from './backend.js';
import { respond, ResponderConfig, DEFAULT_RESPONDER } from './respond.js';
import { BridgeResponse, parseRequest } from './wire.js';

const UNPARSEABLE: BridgeResponse = {
  proposal: null,
  message: '',
  chosen_index: null,
  thoughts: 'malformed: request is not valid JSON',
};

export async function handleLine(
  line: string,
  backend: Backend,
  config: ResponderConfig = DEFAULT_RESPONDER,
): Promise<string> {
  const request = parseRequest(line);
  const response = request === null ? UNPARSEABLE : await respond(request, backend, config);
  return JSON.stringify(response);
}

export async function serve(
  backend: Backend,
  config: ResponderConfig = DEFAULT_RESPONDER,
  input: NodeJS.ReadableStream = process.stdin,
  output: NodeJS.WritableStream = process.stdout,
): Promise<void> {
  const lines = createInterface({ input, crlfDelay: Infinity });
  for await (const line of lines) {
    if (!line.trim()) continue;
    output.write((await handleLine(line, backend, config)) + '\n');
  }
}
