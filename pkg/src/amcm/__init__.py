"""Alpha motion constraint: box extraction, the fusion block and stage-2 training."""
