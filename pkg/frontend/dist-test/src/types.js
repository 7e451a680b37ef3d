/** Wire types of the control-service API (see docs/data-formats.md). */
export {};
