/** Fixed-interval polling; 2 s is plenty at human feedback cadence.
 *
 * Ticks never overlap: if a refresh is still in flight when the interval
 * fires, that beat is skipped. Errors go to the handler and polling carries
 * on; a flaky network should degrade the view, not kill it.
 */

export interface PollHandle {
  stop(): void;
}

export function startPolling(
  tick: () => Promise<void>,
  intervalMs = 2000,
  onError: (error: unknown) => void = () => {},
): PollHandle {
  let inFlight = false;
  const timer = setInterval(() => {
    if (inFlight) {
      return;
    }
    inFlight = true;
    tick()
      .catch(onError)
      .finally(() => {
        inFlight = false;
      });
  }, intervalMs);
  return {
    stop() {
      clearInterval(timer);
    },
  };
}
