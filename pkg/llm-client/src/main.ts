/** Entry point: serve bridge requests over stdio.
 *
 * Online: --endpoint URL --model NAME [--api-key-env VAR]
 * Offline: --stub DIRECTORY (canned completions; no network access)
 */

import { OpenAICompatibleBackend, StubBackend, Backend } from './backend.js';
import { DEFAULT_RESPONDER } from './respond.js';
import { serve } from './transport.js';

interface CliArgs {
  stub?: string;
  endpoint?: string;
  model?: string;
  apiKeyEnv: string;
  retries: number;
  actingTemperature: number;
  maxMessageLength: number;
}

function parseArgs(argv: string[]): CliArgs {
  const args: CliArgs = {
    apiKeyEnv: 'OPENAI_API_KEY',
    retries: 2,
    actingTemperature: DEFAULT_RESPONDER.actingTemperature,
    maxMessageLength: DEFAULT_RESPONDER.maxMessageLength,
  };
  for (let i = 0; i < argv.length; i += 1) {
    const flag = argv[i];
    const value = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`${flag} needs a value`);
      return argv[i];
    };
    switch (flag) {
      case '--stub': args.stub = value(); break;
      case '--endpoint': args.endpoint = value(); break;
      case '--model': args.model = value(); break;
      case '--api-key-env': args.apiKeyEnv = value(); break;
      case '--retries': args.retries = Number(value()); break;
      case '--temperature': args.actingTemperature = Number(value()); break;
      case '--max-message-length': args.maxMessageLength = Number(value()); break;
      default: throw new Error(`unknown flag ${flag}`);
    }
  }
  return args;
}

function buildBackend(args: CliArgs): Backend {
  if (args.stub) return new StubBackend(args.stub);
  if (!args.endpoint || !args.model) {
    throw new Error('either --stub DIR or both --endpoint and --model are required');
  }
  return new OpenAICompatibleBackend({
    endpoint: args.endpoint,
    model: args.model,
    apiKeyEnvVar: args.apiKeyEnv,
    maxRetries: args.retries,
  });
}

async function main(): Promise<void> {
  const args = parseArgs(process.argv.slice(2));
  const backend = buildBackend(args);
  await serve(backend, {
    ...DEFAULT_RESPONDER,
    actingTemperature: args.actingTemperature,
    maxMessageLength: args.maxMessageLength,
  });
}

main().catch((error) => {
  process.stderr.write(`fatal: ${String(error)}\n`);
  process.exit(1);
});
