//! Worked examples, one test each.

mod common;

macro_rules! golden {
    ($($name:ident,)*) => {
        $(
            #[test]
            fn $name() {
                if let Err(e) = common::golden::$name() {
                    panic!("{e}");
                }
            }
        )*
    };
}

golden! {
    hello_bits,
    parsable_aligned,
    parsable_lookahead,
    parsable_expected,
    conditional_little_endian,
    array_dynamic_size,
    array_initialized,
    array_partial,
    class_simple,
    class_params,
    inheritance,
    inheritance_ids,
    id_range,
    map_class_output,
    map_not_prefix_free,
    map_escape,
    isidof_loop,
    lengthof_simple,
    lengthof_growing,
    scoping_errors,
    include_directive,
    import_directive,
    pragmas,
    verbatim_blocks,
}
