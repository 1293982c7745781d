#![no_main]
use libfuzzer_sys::fuzz_target;
use peakctl_core::inventory::{InventoryModel, InventoryParams};
use peakctl_core::queue::{QueueModel, QueueParams};

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = serde_json::from_slice::<InventoryParams>(data) {
        let _ = InventoryModel::new(p);
    }
    if let Ok(p) = serde_json::from_slice::<QueueParams>(data) {
        let _ = QueueModel::new(p);
    }
});
