/**
 * Error types mirroring the core CLI's exit-code contract.
 *
 * The core distinguishes unreadable/malformed inputs (exit 2) from inputs
 * that are individually fine but jointly violate a contract, like two
 * volumes of different dims (exit 3). Bindings keep that split so callers
 * can tell "fix your file" from "fix your call".
 */

export class CoreError extends Error {
  /** Exit status of the core process. */
  readonly exitCode: number;
  /** Raw stderr text, untrimmed, for diagnostics. */
  readonly stderr: string;

  constructor(message: string, exitCode: number, stderr: string) {
    super(message);
    this.name = new.target.name;
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}

/** Exit 2: an input file was unreadable or malformed. */
export class CoreInputError extends CoreError {}

/** Exit 3: inputs violated a contract (shape mismatch and the like). */
export class CoreContractError extends CoreError {}

/** Exit 64: the core did not recognize the invocation we assembled. */
export class CoreUsageError extends CoreError {}

/** The core executable could not be spawned at all. */
export class CoreNotFoundError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CoreNotFoundError";
  }
}
