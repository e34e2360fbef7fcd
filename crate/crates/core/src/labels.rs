//! Human-readable action labels.

/// The sixteen in-cabin driver actions, in class-index order.
pub const DRIVER_ACTIONS: [&str; 16] = [
    "normal_driving",
    "drinking",
    "phone_call_right",
    "phone_call_left",
    "eating",
    "texting_right",
    "texting_left",
    "hair_and_makeup",
    "reaching_behind",
    "adjusting_control_panel",
    "picking_up_driver_floor",
    "picking_up_passenger_floor",
    "talking_to_passenger_right",
    "talking_to_passenger_back",
    "yawning",
    "hand_on_head",
];

/// Named label for 16-class models, `class_{i}` otherwise.
pub fn class_label(num_classes: usize, index: usize) -> String {
    if num_classes == DRIVER_ACTIONS.len() && index < num_classes {
        DRIVER_ACTIONS[index].to_string()
    } else {
        format!("class_{index}")
    }
}
